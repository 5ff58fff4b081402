//! Destructive testing: one measurement per unit, weighted time model `f2(t)/σ(t)` and
//! product designs `ξ* ⊗ τ*`.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::design::{
    c_criterion, c_value, certificate_gap, fmt_num, product_design, ApproximateDesign, CriterionValue, DesignReport,
};
use crate::error::{Error, Result};
use crate::failure::{use_profile, QuantileTime};
use crate::linalg::{kron_vec, quad};
use crate::model::{Basis, BasisKind, KroneckerRegression, Regression, Region, Scenario};
use crate::stress::{elfving_solve, extrapolation_design};

/// Time points for the Elfving solve in the weighted time model when no closed form applies.
pub const TIME_GRID: usize = 1001;
/// Sensitivity probes per curve.
pub const PROBE_POINTS: usize = 50;

/// Single-measurement time model with variance `σ²(t) = f2(t)ᵀ Σγ f2(t) + σε²`.
#[derive(Debug, Clone)]
pub struct WeightedTimeModel {
    basis: Basis,
    sigma_gamma: DMatrix<f64>,
    sigma_eps2: f64,
}

impl WeightedTimeModel {
    pub fn new(basis: Basis, sigma_gamma: DMatrix<f64>, sigma_eps2: f64) -> Result<Self> {
        if sigma_gamma.nrows() != basis.dimension() || sigma_gamma.ncols() != basis.dimension() {
            return Err(Error::InvalidInput("Σγ does not match the time basis".into()));
        }
        if !(sigma_eps2 >= 0.0) {
            return Err(Error::InvalidInput("error variance must be non-negative".into()));
        }
        let m = Self {
            basis,
            sigma_gamma,
            sigma_eps2,
        };
        for (i, t) in m.basis.region().grid(101).iter().enumerate() {
            if !(m.variance(t[0]) > 0.0) {
                return Err(Error::DegenerateVariance(format!("σ²(t) = 0 at grid point {i} (t = {})", t[0])));
            }
        }
        Ok(m)
    }

    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        let se2 = s.varcomps().sigma_eps_matrix(1)?[(0, 0)];
        Self::new(s.model().time_basis().clone(), s.varcomps().sigma_gamma().clone(), se2)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn variance(&self, t: f64) -> f64 {
        quad(&self.sigma_gamma, &self.basis.eval(&[t])) + self.sigma_eps2
    }

    pub fn sd(&self, t: f64) -> f64 {
        self.variance(t).sqrt()
    }

    /// `f̃2(t) = f2(t) / σ(t)`.
    pub fn weighted(&self, t: f64) -> DVector<f64> {
        self.basis.eval(&[t]) / self.sd(t)
    }

    /// `M̃2(τ) = Σ π_j f̃2(t_j) f̃2(t_j)ᵀ`.
    pub fn information(&self, tau: &ApproximateDesign) -> DMatrix<f64> {
        tau.information(self)
    }
}

impl Regression for WeightedTimeModel {
    fn dim(&self) -> usize {
        self.basis.dimension()
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn features(&self, x: &[f64]) -> DVector<f64> {
        self.weighted(x[0])
    }
}

/// `σ(1)/σ(0)` for a single measurement.
pub fn sigma_ratio(s: &Scenario) -> Result<f64> {
    let m = WeightedTimeModel::from_scenario(s)?;
    let s0 = m.sd(0.0);
    if !(s0 > 0.0) {
        return Err(Error::DegenerateVariance("σ(0) = 0".into()));
    }
    Ok(m.sd(1.0) / s0)
}

/// `π* = t σ(1) / (t σ(1) + (t − 1) σ(0))`, the weight at `t = 1` of the c-optimal two-point
/// time design for extrapolation to `t > 1` in the weighted straight-line model.
pub fn pi_star(t_half: f64, sigma0: f64, sigma1: f64) -> Result<f64> {
    if !(t_half > 1.0) {
        return Err(Error::InvalidInput(format!(
            "t = {t_half} lies inside the experimental time range; solve the weighted Elfving problem instead"
        )));
    }
    if !(sigma0 > 0.0 && sigma1 > 0.0) {
        return Err(Error::DegenerateVariance("endpoint standard deviations must be positive".into()));
    }
    Ok(t_half * sigma1 / (t_half * sigma1 + (t_half - 1.0) * sigma0))
}

fn is_unit_line(b: &Basis) -> bool {
    matches!(b.kind(), BasisKind::Linear) && b.region().bounds() == [(0.0, 1.0)]
}

fn two_point(pi: f64) -> Result<ApproximateDesign> {
    ApproximateDesign::normalized(vec![vec![0.0], vec![1.0]], vec![1.0 - pi, pi])
}

/// c-optimal time marginal for extrapolation to `t` in the weighted model.
pub fn optimal_time_marginal(m: &WeightedTimeModel, t: f64) -> Result<ApproximateDesign> {
    if is_unit_line(m.basis()) && t > 1.0 {
        return two_point(pi_star(t, m.sd(0.0), m.sd(1.0))?);
    }
    let cands = m.basis().region().grid(TIME_GRID);
    Ok(elfving_solve(m, &cands, &m.basis().eval(&[t]))?.design)
}

fn median(s: &Scenario) -> Result<f64> {
    match use_profile(s).median()? {
        QuantileTime::Finite(t) => Ok(t),
        other => Err(Error::DegenerateQuantile(format!("the median failure time is {other:?}"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DestructiveDesign {
    pub stress: ApproximateDesign,
    pub time: ApproximateDesign,
    /// `ζ* = ξ* ⊗ τ*`; points are `(x..., t)`.
    pub report: DesignReport,
    pub t_half: f64,
    pub sigma_ratio: f64,
}

/// `c = f1(x_u) ⊗ f2(t_0.5)` criterion of a combined design in the single-measurement model.
pub fn destructive_criterion(s: &Scenario, zeta: &ApproximateDesign) -> Result<CriterionValue> {
    let wm = WeightedTimeModel::from_scenario(s)?;
    let t = median(s)?;
    let reg = KroneckerRegression {
        first: s.model().stress(),
        second: &wm,
    };
    let c = kron_vec(&s.c_stress(), &wm.basis().eval(&[t]));
    Ok(c_criterion(zeta, &reg, &c))
}

/// Optimal design for the median failure time under destructive testing.
///
/// The certificate is checked on a combined grid of `stress_grid` points per stress axis times
/// `time_grid` time points.
pub fn destructive_optimal_design(s: &Scenario, stress_grid: usize, time_grid: usize) -> Result<DestructiveDesign> {
    let t = median(s)?;
    let wm = WeightedTimeModel::from_scenario(s)?;
    let xi = extrapolation_design(s, stress_grid.max(2))?;
    let tau = optimal_time_marginal(&wm, t)?;
    let zeta = product_design(&xi, &tau);
    let reg = KroneckerRegression {
        first: s.model().stress(),
        second: &wm,
    };
    let c = kron_vec(&s.c_stress(), &wm.basis().eval(&[t]));
    let criterion = c_criterion(&zeta, &reg, &c);
    let stress_pts = s.model().stress().region().grid(stress_grid.max(2));
    let time_pts = wm.basis().region().grid(time_grid.max(2));
    let combined: Vec<Vec<f64>> = stress_pts
        .iter()
        .flat_map(|x| {
            time_pts.iter().map(move |tt| {
                let mut z = x.clone();
                z.push(tt[0]);
                z
            })
        })
        .collect();
    let gap = certificate_gap(&zeta, &reg, &c, &combined);
    let ratio = wm.sd(1.0) / wm.sd(0.0);
    let mut benchmarks = BTreeMap::new();
    for k in [2usize, 6] {
        let bar = uniform_time(k)?;
        let e = marginal_efficiency(&wm, &bar, &tau, t);
        benchmarks.insert(format!("efficiency_uniform_{k}_time_points"), e);
    }
    Ok(DestructiveDesign {
        stress: xi,
        time: tau,
        report: DesignReport {
            design: zeta,
            criterion,
            efficiency: 1.0,
            certificate_gap: gap,
            benchmarks,
            notes: vec![format!("t_0.5 = {}, sigma(1)/sigma(0) = {}", fmt_num(t), fmt_num(ratio))],
        },
        t_half: t,
        sigma_ratio: ratio,
    })
}

/// Equal weights on `k` equispaced times in `[0, 1]`.
pub fn uniform_time(k: usize) -> Result<ApproximateDesign> {
    ApproximateDesign::uniform(crate::presets::equispaced_times(k).into_iter().map(|t| vec![t]).collect())
}

/// `c₂ᵀ M̃2(τ)⁻¹ c₂` with `c₂ = f2(t)`.
pub fn weighted_time_criterion(m: &WeightedTimeModel, tau: &ApproximateDesign, t: f64) -> f64 {
    c_value(&m.information(tau), &m.basis().eval(&[t])).value
}

/// c-efficiency of `tau` against `reference` in the weighted time model.
pub fn marginal_efficiency(m: &WeightedTimeModel, tau: &ApproximateDesign, reference: &ApproximateDesign, t: f64) -> f64 {
    let num = weighted_time_criterion(m, reference, t);
    let den = weighted_time_criterion(m, tau, t);
    if den.is_finite() && den > 0.0 {
        num / den
    } else if den.is_nan() {
        f64::NAN
    } else {
        0.0
    }
}

/// Parameter varied in a sensitivity curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// True median failure time; variances at their nominal values.
    MedianTime,
    /// True `σ(1)/σ(0)`; median at its nominal value. Interior time points follow the path
    /// `σ2² = σ1² + σε²` with `ρ` solved from the ratio.
    SigmaRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub probe_value: f64,
    pub eff_optimal: f64,
    pub eff_uniform2: f64,
    /// NaN when the probe ratio cannot be reached on the variance path (`|ρ| > 1`).
    pub eff_uniform6: f64,
}

/// Variance model at a probe value of `σ(1)/σ(0)`: `None` when `|ρ| > 1` is required, in which
/// case only the endpoint variances are defined.
fn ratio_path(s: &Scenario, ratio: f64) -> Result<(f64, f64, Option<WeightedTimeModel>)> {
    let p = s.variance_params();
    let names = s.parametrization().names();
    if names != ["sigma1", "sigma2", "rho", "sigma_eps"] || !is_unit_line(s.model().time_basis()) {
        return Err(Error::InvalidInput(
            "ratio probes need a straight-line time model with (sigma1, sigma2, rho, sigma_eps)".into(),
        ));
    }
    let (s1, se) = (p[0], p[3]);
    let v0 = s1 * s1 + se * se;
    let s2 = v0.sqrt();
    let rho = (ratio * ratio - 2.0) * v0 / (2.0 * s1 * s2);
    let sd0 = v0.sqrt();
    let sd1 = ratio * sd0;
    let model = if rho.abs() <= 1.0 {
        let sg = DMatrix::from_row_slice(2, 2, &[s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2]);
        Some(WeightedTimeModel::new(s.model().time_basis().clone(), sg, se * se)?)
    } else {
        None
    };
    Ok((sd0, sd1, model))
}

/// Criterion for a design supported on `{0, 1}` given only the endpoint standard deviations.
fn endpoint_criterion(tau: &ApproximateDesign, sd0: f64, sd1: f64, t: f64) -> f64 {
    let mut m = DMatrix::zeros(2, 2);
    for (x, w) in tau.iter() {
        let sd = if x[0] == 0.0 { sd0 } else { sd1 };
        let f = DVector::from_vec(vec![1.0, x[0]]) / sd;
        m.ger(w, &f, &f, 1.0);
    }
    c_value(&m, &DVector::from_vec(vec![1.0, t])).value
}

/// Efficiencies of the nominal-optimal time marginal and of the uniform 2- and 6-point plans
/// when the true parameter takes the probe value.
pub fn sensitivity_at(s: &Scenario, probe: Probe, value: f64) -> Result<SensitivityRow> {
    let t_nom = median(s)?;
    let wm = WeightedTimeModel::from_scenario(s)?;
    let tau_nom = optimal_time_marginal(&wm, t_nom)?;
    let u2 = uniform_time(2)?;
    let u6 = uniform_time(6)?;
    match probe {
        Probe::MedianTime => {
            let local = optimal_time_marginal(&wm, value)?;
            Ok(SensitivityRow {
                probe_value: value,
                eff_optimal: marginal_efficiency(&wm, &tau_nom, &local, value),
                eff_uniform2: marginal_efficiency(&wm, &u2, &local, value),
                eff_uniform6: marginal_efficiency(&wm, &u6, &local, value),
            })
        }
        Probe::SigmaRatio => {
            let (sd0, sd1, path) = ratio_path(s, value)?;
            let local = two_point(pi_star(t_nom, sd0, sd1)?)?;
            let best = endpoint_criterion(&local, sd0, sd1, t_nom);
            let eff6 = match &path {
                Some(m) => best / weighted_time_criterion(m, &u6, t_nom),
                None => f64::NAN,
            };
            Ok(SensitivityRow {
                probe_value: value,
                eff_optimal: best / endpoint_criterion(&tau_nom, sd0, sd1, t_nom),
                eff_uniform2: best / endpoint_criterion(&u2, sd0, sd1, t_nom),
                eff_uniform6: eff6,
            })
        }
    }
}

/// `points` log-spaced values in `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// Efficiency curves over log-spaced probe values.
pub fn sensitivity_curves(s: &Scenario, probe: Probe, range: (f64, f64), points: usize) -> Result<Vec<SensitivityRow>> {
    check_range(probe, range)?;
    log_space(range.0, range.1, points)
        .into_iter()
        .map(|v| sensitivity_at(s, probe, v))
        .collect()
}

fn check_range(probe: Probe, (lo, hi): (f64, f64)) -> Result<()> {
    let min = match probe {
        Probe::MedianTime => 1.0,
        Probe::SigmaRatio => 0.0,
    };
    if !(lo > min && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidInput(format!("probe range ({lo}, {hi}) must satisfy {min} < lo < hi < ∞")));
    }
    Ok(())
}

/// `π*` as a function of the probe, other parameters nominal.
pub fn pi_star_curve(s: &Scenario, probe: Probe, range: (f64, f64), points: usize) -> Result<Vec<(f64, f64)>> {
    check_range(probe, range)?;
    let t_nom = median(s)?;
    let wm = WeightedTimeModel::from_scenario(s)?;
    let (sd0, sd1) = (wm.sd(0.0), wm.sd(1.0));
    log_space(range.0, range.1, points)
        .into_iter()
        .map(|v| {
            let pi = match probe {
                Probe::MedianTime => pi_star(v, sd0, sd1)?,
                Probe::SigmaRatio => pi_star(t_nom, 1.0, v)?,
            };
            Ok((v, pi))
        })
        .collect()
}

/// CSV with columns `probe_value,eff_optimal,eff_uniform2,eff_uniform6`.
pub fn write_sensitivity_csv<W: Write>(out: W, rows: &[SensitivityRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["probe_value", "eff_optimal", "eff_uniform2", "eff_uniform6"]).map_err(err)?;
    for r in rows {
        w.write_record([
            fmt_num(r.probe_value),
            fmt_num(r.eff_optimal),
            fmt_num(r.eff_uniform2),
            fmt_num(r.eff_uniform6),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// Default probe range for each curve.
pub fn default_range(probe: Probe) -> (f64, f64) {
    match probe {
        Probe::MedianTime => (1.05, 50.0),
        Probe::SigmaRatio => (0.2, 5.0),
    }
}

/// Time region check used by callers building their own candidate sets.
pub fn time_region(m: &WeightedTimeModel) -> &Region {
    m.basis().region()
}
