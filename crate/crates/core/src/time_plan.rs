//! Repeated-measurement time plans for the median failure time: constrained multiplicative
//! algorithm on a time grid with per-point cap `1/k`, and adjustment to exact `k`-point plans.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::design::{c_value, fmt_num, ApproximateDesign, CriterionValue, DesignReport};
use crate::error::{Error, Result};
use crate::failure::{use_profile, QuantileTime};
use crate::linalg::{quad, spd_inverse};
use crate::model::{Basis, Scenario};

/// Grid `{0, Δt, ..., 1}` with `k` measurements per unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    delta_t: f64,
    k: usize,
    points: Vec<f64>,
    capped: bool,
}

impl TimeGrid {
    pub fn new(delta_t: f64, k: usize) -> Result<Self> {
        if !(delta_t > 0.0 && delta_t <= 1.0) {
            return Err(Error::InvalidInput(format!("grid increment {delta_t} must lie in (0, 1]")));
        }
        let j = (1.0 / delta_t).round();
        if (j * delta_t - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("1/Δt = {} is not an integer", 1.0 / delta_t)));
        }
        if k == 0 {
            return Err(Error::InvalidInput("k must be positive".into()));
        }
        let j = j as usize;
        if j + 1 < k {
            return Err(Error::InvalidInput(format!(
                "cap 1/{k} is infeasible on {} grid points",
                j + 1
            )));
        }
        let points = (0..=j).map(|i| i as f64 / j as f64).collect();
        Ok(Self {
            delta_t,
            k,
            points,
            capped: true,
        })
    }

    /// Same grid without the per-point cap, i.e. replicated measurements allowed.
    pub fn uncapped(delta_t: f64, k: usize) -> Result<Self> {
        let mut g = Self::new(delta_t, 1)?;
        g.k = k;
        g.capped = false;
        Ok(g)
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Largest admissible weight per time point.
    pub fn cap(&self) -> f64 {
        if self.capped {
            1.0 / self.k as f64
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TimePlanOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for TimePlanOptions {
    fn default() -> Self {
        Self {
            max_iter: 100_000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimePlanResult {
    pub grid: TimeGrid,
    /// Weight of every grid point, zeros included.
    pub grid_weights: Vec<f64>,
    pub report: DesignReport,
    pub t_half: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Criterion after each iteration.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// Weights below this fraction of the cap are treated as zero when reading off the support.
const SUPPORT_TOL: f64 = 1e-6;

/// c-optimal time plan for extrapolation to `t_0.5` in the fixed-effect time model, subject to
/// weights at most `1/k`. Requires homoscedastic uncorrelated errors, where the criterion does
/// not depend on `σε²` or `Σγ`.
pub fn optimal_time_plan(s: &Scenario, grid: &TimeGrid, opts: TimePlanOptions) -> Result<TimePlanResult> {
    if s.varcomps().sigma_eps().scalar_variance().is_none() {
        return Err(Error::InvalidInput(
            "time-plan optimization needs homoscedastic uncorrelated errors".into(),
        ));
    }
    let t_half = median_time(s)?;
    let basis = s.model().time_basis();
    if grid.k() < basis.dimension() {
        return Err(Error::InvalidInput(format!(
            "k = {} is below the time basis dimension {}",
            grid.k(),
            basis.dimension()
        )));
    }
    let c = basis.eval(&[t_half]);
    let f: Vec<DVector<f64>> = grid.points().iter().map(|&t| basis.eval(&[t])).collect();
    let cap = grid.cap();
    let n = f.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let (phi, d) = sensitivities(&f, &w, &c)?;
        trace.push(phi);
        if fw_gap(&d, &w, cap, phi) < opts.tol {
            converged = true;
            break;
        }
        let mut next: Vec<f64> = w.iter().zip(&d).map(|(wi, di)| wi * di.sqrt()).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        w = project_capped(next, cap);
    }
    if let Some(snapped) = snap(&w, cap) {
        if let (Ok((a, _)), Ok((b, _))) = (sensitivities(&f, &snapped, &c), sensitivities(&f, &w, &c)) {
            if a <= b {
                w = snapped;
            }
        }
    }
    let (phi, d) = sensitivities(&f, &w, &c)?;
    let gap = fw_gap(&d, &w, cap, phi);

    let (support, weights): (Vec<_>, Vec<_>) = grid
        .points()
        .iter()
        .zip(&w)
        .filter(|(_, wi)| **wi > SUPPORT_TOL * cap)
        .map(|(t, wi)| (vec![*t], *wi))
        .unzip();
    let design = ApproximateDesign::normalized(support, weights)?;
    let mut benchmarks = BTreeMap::new();
    let uniform = ApproximateDesign::uniform(crate::presets::equispaced_times(grid.k()).into_iter().map(|t| vec![t]).collect())?;
    let eff_uniform = time_plan_efficiency(&uniform, &design, s, grid.k())?;
    benchmarks.insert(format!("mixed_efficiency_uniform_{}_point", grid.k()), eff_uniform);
    let mut notes = vec![format!("extrapolation to t_0.5 = {}", fmt_num(t_half))];
    if !converged {
        notes.push(format!("stopped after {iterations} iterations with gap {gap:.3e}"));
    }
    Ok(TimePlanResult {
        grid: grid.clone(),
        grid_weights: w,
        report: DesignReport {
            design,
            criterion: CriterionValue {
                value: phi,
                feasible: true,
                non_estimable_full_model: false,
            },
            efficiency: 1.0,
            certificate_gap: gap,
            benchmarks,
            notes,
        },
        t_half,
        iterations,
        converged,
        trace,
    })
}

fn median_time(s: &Scenario) -> Result<f64> {
    match use_profile(s).median()? {
        QuantileTime::Finite(t) => Ok(t),
        other => Err(Error::DegenerateQuantile(format!("the median failure time is {other:?}"))),
    }
}

/// `Φ = cᵀM⁻¹c` and `d_j = (f_jᵀ M⁻¹ c)²`.
fn sensitivities(f: &[DVector<f64>], w: &[f64], c: &DVector<f64>) -> Result<(f64, Vec<f64>)> {
    let p = c.len();
    let mut m = DMatrix::zeros(p, p);
    for (fj, wj) in f.iter().zip(w) {
        m.ger(*wj, fj, fj, 1.0);
    }
    let minv = spd_inverse(&m, "time-plan information")?;
    let mc = &minv * c;
    let d = f.iter().map(|fj| fj.dot(&mc).powi(2)).collect();
    Ok((c.dot(&mc), d))
}

/// Relative Frank-Wolfe gap `(max_{w' capped} Σ w'_j d_j − Φ) / Φ`; zero exactly at the
/// constrained optimum. The maximizer fills the largest `d_j` up to the cap.
fn fw_gap(d: &[f64], _w: &[f64], cap: f64, phi: f64) -> f64 {
    let mut sorted: Vec<f64> = d.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut mass = 1.0;
    let mut best = 0.0;
    for v in sorted {
        let take = cap.min(mass);
        best += take * v;
        mass -= take;
        if mass <= 0.0 {
            break;
        }
    }
    (best - phi) / phi
}

/// Moves weights within `SNAP` (relative) of the cap onto it and drops weights below `SNAP · cap`,
/// rescaling the partial weights to keep the total at one.
fn snap(w: &[f64], cap: f64) -> Option<Vec<f64>> {
    const SNAP: f64 = 1e-3;
    let mut out: Vec<f64> = w
        .iter()
        .map(|&v| {
            if v >= cap * (1.0 - SNAP) {
                cap
            } else if v <= cap * SNAP {
                0.0
            } else {
                v
            }
        })
        .collect();
    let fixed: f64 = out.iter().filter(|v| **v == cap).sum();
    let partial: f64 = out.iter().filter(|v| **v != cap).sum();
    let rest = 1.0 - fixed;
    if rest < -1e-12 {
        return None;
    }
    if partial == 0.0 {
        return (rest.abs() <= 1e-12).then_some(out);
    }
    let scale = rest / partial;
    for v in out.iter_mut().filter(|v| **v != cap) {
        *v *= scale;
        if *v > cap {
            return None;
        }
    }
    Some(out)
}

/// Clips weights above the cap and spreads the excess proportionally over the rest.
fn project_capped(mut w: Vec<f64>, cap: f64) -> Vec<f64> {
    let mut capped = vec![false; w.len()];
    loop {
        let mut changed = false;
        for (wi, ci) in w.iter_mut().zip(capped.iter_mut()) {
            if !*ci && *wi >= cap {
                *wi = cap;
                *ci = true;
                changed = true;
            }
        }
        if !changed {
            return w;
        }
        let n_capped = capped.iter().filter(|c| **c).count();
        let free: f64 = w.iter().zip(&capped).filter(|(_, c)| !**c).map(|(v, _)| v).sum();
        let target = 1.0 - n_capped as f64 * cap;
        if free <= 0.0 {
            return w;
        }
        let scale = target / free;
        for (wi, ci) in w.iter_mut().zip(&capped) {
            if !*ci {
                *wi *= scale;
            }
        }
    }
}

/// Exact `k`-point plan from `τ*`: keeps the full-cap points and fills the remaining slots
/// with the heaviest partial points (earlier time on ties).
pub fn adjust_to_exact_plan(tau_star: &ApproximateDesign, grid: &TimeGrid) -> Result<Vec<f64>> {
    let cap = grid.cap();
    let k = grid.k();
    let pts: Vec<(f64, f64)> = tau_star.iter().map(|(x, w)| (x[0], w)).collect();
    let full: Vec<f64> = pts.iter().filter(|(_, w)| *w >= cap * (1.0 - 1e-6)).map(|(t, _)| *t).collect();
    if full.len() > k {
        return Err(Error::Consistency(format!(
            "{} points carry the full weight 1/{k}",
            full.len()
        )));
    }
    let mut partial: Vec<(f64, f64)> = pts.iter().copied().filter(|(_, w)| *w < cap * (1.0 - 1e-6)).collect();
    partial.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    let need = k - full.len();
    if partial.len() < need {
        return Err(Error::Consistency(format!(
            "only {} points available for a {k}-point plan",
            full.len() + partial.len()
        )));
    }
    let mut times: Vec<f64> = full.into_iter().chain(partial.into_iter().take(need).map(|(t, _)| t)).collect();
    times.sort_by(f64::total_cmp);
    Ok(times)
}

/// `c₂ᵀ M2(τ)⁻¹ c₂` in the mixed time model with `k` measurements per unit:
/// `M2(τ)⁻¹ = (σε²/k) (Σ π_j f2 f2ᵀ)⁻¹ + Σγ`.
pub fn mixed_time_criterion(tau: &ApproximateDesign, s: &Scenario, k: usize, t: f64) -> Result<f64> {
    let sigma2 = s
        .varcomps()
        .sigma_eps()
        .scalar_variance()
        .ok_or_else(|| Error::InvalidInput("mixed time criterion needs scalar error variance".into()))?;
    let basis: &Basis = s.model().time_basis();
    let m0 = tau.information(basis);
    let c = basis.eval(&[t]);
    let cv = c_value(&m0, &c);
    if !cv.feasible {
        return Ok(f64::INFINITY);
    }
    Ok(sigma2 / k as f64 * cv.value + quad(s.varcomps().sigma_gamma(), &c))
}

/// Efficiency of `tau0` relative to `tau_star` for `t_0.5` in the mixed time model.
pub fn time_plan_efficiency(tau0: &ApproximateDesign, tau_star: &ApproximateDesign, s: &Scenario, k: usize) -> Result<f64> {
    let t = median_time(s)?;
    let num = mixed_time_criterion(tau_star, s, k, t)?;
    let den = mixed_time_criterion(tau0, s, k, t)?;
    Ok(if den.is_finite() { num / den } else { 0.0 })
}

/// Same ratio in the fixed-effect time model (no `Σγ`).
pub fn fixed_effect_efficiency(tau0: &ApproximateDesign, tau_star: &ApproximateDesign, s: &Scenario) -> Result<f64> {
    let t = median_time(s)?;
    let basis = s.model().time_basis();
    let c = basis.eval(&[t]);
    let num = c_value(&tau_star.information(basis), &c);
    let den = c_value(&tau0.information(basis), &c);
    Ok(if den.feasible { num.value / den.value } else { 0.0 })
}

/// `t,weight` for every grid point.
pub fn write_weight_profile_csv<W: Write>(out: W, grid: &TimeGrid, weights: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["t", "weight"]).map_err(err)?;
    for (t, v) in grid.points().iter().zip(weights) {
        w.write_record([fmt_num(*t), fmt_num(*v)]).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of the fixed-effect time information, exposed for diagnostics.
pub fn fixed_effect_inverse(tau: &ApproximateDesign, basis: &Basis) -> Result<DMatrix<f64>> {
    spd_inverse(&tau.information(basis), "time-plan information")
}
