//! Soft-failure time under normal use: distribution, quantiles, delta-method gradient and
//! asymptotic variance of the quantile estimator.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::{c_value, fmt_num, ApproximateDesign};
use crate::error::{Error, Result};
use crate::linalg::{kron_vec, quad, sym_pinv};
use crate::model::{
    build_time_matrix, info_varsigma, inverse_marginal_info, Basis, BasisKind, DerivativeRoute, Scenario,
    VarianceParametrization,
};

const BISECTION_TOL: f64 = 1e-12;
const MAX_DOUBLINGS: i32 = 60;
const MONOTONE_GRID: usize = 4096;

pub(crate) fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// `z_α`, with `z_0.5 = 0` exactly.
pub fn z_alpha(alpha: f64) -> f64 {
    if alpha == 0.5 {
        0.0
    } else {
        std_normal().inverse_cdf(alpha)
    }
}

/// Mean degradation path and its standard deviation across units at the use condition.
#[derive(Debug, Clone)]
pub struct UseConditionProfile {
    delta: DVector<f64>,
    time_basis: Basis,
    sigma_gamma: DMatrix<f64>,
    threshold: f64,
}

/// `δ_s = Σ_r f_1r(x_u) β_rs`, together with `Σγ`, the time basis and `y0`.
pub fn use_profile(s: &Scenario) -> UseConditionProfile {
    let m = s.model();
    let (p1, p2) = (m.p1(), m.p2());
    let f1 = s.c_stress();
    let delta = DVector::from_fn(p2, |j, _| (0..p1).map(|r| f1[r] * s.beta()[r * p2 + j]).sum());
    UseConditionProfile {
        delta,
        time_basis: m.time_basis().clone(),
        sigma_gamma: s.varcomps().sigma_gamma().clone(),
        threshold: s.threshold(),
    }
}

impl UseConditionProfile {
    pub fn new(delta: Vec<f64>, time_basis: Basis, sigma_gamma: DMatrix<f64>, threshold: f64) -> Result<Self> {
        let p2 = time_basis.dimension();
        if delta.len() != p2 || sigma_gamma.nrows() != p2 || sigma_gamma.ncols() != p2 {
            return Err(Error::InvalidInput("profile dimensions disagree with the time basis".into()));
        }
        Ok(Self {
            delta: DVector::from_vec(delta),
            time_basis,
            sigma_gamma,
            threshold,
        })
    }

    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn sigma_gamma(&self) -> &DMatrix<f64> {
        &self.sigma_gamma
    }

    pub fn time_basis(&self) -> &Basis {
        &self.time_basis
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.delta.dot(&self.time_basis.eval(&[t]))
    }

    pub fn mu_prime(&self, t: f64) -> f64 {
        self.delta.dot(&self.time_basis.derivative(t))
    }

    pub fn sigma_u(&self, t: f64) -> f64 {
        quad(&self.sigma_gamma, &self.time_basis.eval(&[t])).max(0.0).sqrt()
    }

    pub fn sigma_u_prime(&self, t: f64) -> f64 {
        let f = self.time_basis.eval(&[t]);
        let df = self.time_basis.derivative(t);
        df.dot(&(&self.sigma_gamma * f)) / self.sigma_u(t)
    }

    /// `h(t) = (μ(t) − y0) / σ_u(t)`.
    pub fn h(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("failure time argument {t} is negative")));
        }
        let s = self.sigma_u(t);
        if !(s > 0.0) {
            return Err(Error::DegenerateVariance(format!("σ_u({t}) = 0")));
        }
        Ok((self.mu(t) - self.threshold) / s)
    }

    /// `F_T(t) = Φ(h(t))`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        Ok(std_normal().cdf(self.h(t)?))
    }

    /// `lim_{t→∞} h(t)`; analytic for polynomial time bases.
    pub fn h_limit(&self) -> f64 {
        let degree = match self.time_basis.kind() {
            BasisKind::Linear => Some(1),
            BasisKind::Polynomial { degree } => Some(*degree),
            _ => None,
        };
        let Some(d) = degree else {
            return self.h(1e15).unwrap_or(f64::NAN);
        };
        let lead_mu = (0..=d).rev().find(|&j| self.delta[j] != 0.0);
        let lead_sd = (0..=d).rev().find(|&j| self.sigma_gamma[(j, j)] > 0.0);
        let Some(es) = lead_sd else {
            return f64::NAN;
        };
        match lead_mu {
            Some(em) if em > es => self.delta[em].signum() * f64::INFINITY,
            Some(em) if em == es && em > 0 => self.delta[em] / self.sigma_gamma[(es, es)].sqrt(),
            _ if es > 0 => 0.0,
            // both constant in t
            _ => (self.mu(0.0) - self.threshold) / self.sigma_gamma[(0, 0)].sqrt(),
        }
    }

    /// `α_max = Φ(lim h)`: quantile levels at or above it are infinite.
    pub fn alpha_max(&self) -> f64 {
        std_normal().cdf(self.h_limit())
    }

    /// `Φ(h(0))`: quantile levels at or below it are zero.
    pub fn alpha_min(&self) -> Result<f64> {
        Ok(std_normal().cdf(self.h(0.0)?))
    }

    /// Solves `h(t_α) = z_α`.
    pub fn quantile(&self, alpha: f64) -> Result<QuantileTime> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha {alpha} must lie in (0, 1)")));
        }
        let z = z_alpha(alpha);
        let h0 = self.h(0.0)?;
        if z <= h0 {
            return Ok(QuantileTime::AtZero);
        }
        let lim = self.h_limit();
        if z >= lim {
            // h may overshoot its limit and come back: then F_T is not monotone
            if let Some(t) = self.exceeds_somewhere(z)? {
                return Err(Error::Ambiguous { lo: 0.0, hi: t });
            }
            return Ok(QuantileTime::Infinite);
        }
        let hi = self.bracket(z)?;
        self.check_monotone(hi)?;
        let t = match self.time_basis.kind() {
            BasisKind::Linear => self.linear_root(z).map_or_else(|| self.bisect(z, hi), Ok)?,
            _ => self.bisect(z, hi)?,
        };
        Ok(QuantileTime::Finite(self.polish(t, z)))
    }

    /// Median failure time. Without random effects every unit fails where `μ(t) = y0`, which
    /// is then the median (and every other quantile).
    pub fn median(&self) -> Result<QuantileTime> {
        if self.sigma_gamma.amax() > 0.0 {
            return self.quantile(0.5);
        }
        if self.mu(0.0) >= self.threshold {
            return Ok(QuantileTime::AtZero);
        }
        let mut hi = 1.0;
        while self.mu(hi) < self.threshold {
            hi *= 2.0;
            if hi > 2f64.powi(MAX_DOUBLINGS) {
                return Ok(QuantileTime::Infinite);
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.mu(mid) < self.threshold {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * hi {
                break;
            }
        }
        Ok(QuantileTime::Finite(hi))
    }

    /// Smallest `T = 2^j` with `h(T) > z`.
    fn bracket(&self, z: f64) -> Result<f64> {
        let mut t = 1.0;
        for _ in 0..=MAX_DOUBLINGS {
            if self.h(t)? > z {
                return Ok(t);
            }
            t *= 2.0;
        }
        Err(Error::DegenerateQuantile(format!(
            "h stays below z = {z} up to t = 2^{MAX_DOUBLINGS}"
        )))
    }

    /// First point of a log-spaced scan over `(0, 2^60]` where `h > z`.
    fn exceeds_somewhere(&self, z: f64) -> Result<Option<f64>> {
        for j in -320..=960 {
            let t = 2f64.powf(j as f64 / 16.0);
            if self.h(t)? > z {
                return Ok(Some(t));
            }
        }
        Ok(None)
    }

    fn check_monotone(&self, hi: f64) -> Result<()> {
        let mut prev = self.h(0.0)?;
        for i in 1..=MONOTONE_GRID {
            let t = hi * i as f64 / MONOTONE_GRID as f64;
            let cur = self.h(t)?;
            if cur < prev - 1e-12 * prev.abs().max(1.0) {
                return Err(Error::Ambiguous { lo: 0.0, hi });
            }
            prev = cur;
        }
        Ok(())
    }

    /// Root of `(μ − y0)² = z² σ_u²` on the ascending branch of `h`.
    fn linear_root(&self, z: f64) -> Option<f64> {
        let (d1, d2) = (self.delta[0] - self.threshold, self.delta[1]);
        let (s11, s12, s22) = (self.sigma_gamma[(0, 0)], self.sigma_gamma[(0, 1)], self.sigma_gamma[(1, 1)]);
        let z2 = z * z;
        let a = d2 * d2 - z2 * s22;
        let b = 2.0 * d2 * d1 - 2.0 * z2 * s12;
        let c = d1 * d1 - z2 * s11;
        let mut roots = Vec::with_capacity(2);
        if a.abs() < 1e-14 * (d2 * d2 + z2 * s22).max(1e-300) {
            if b != 0.0 {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                return None;
            }
            // numerically stable pair
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q != 0.0 {
                roots.push(q / a);
                roots.push(c / q);
            } else {
                roots.push(0.0);
            }
        }
        roots
            .into_iter()
            .filter(|&t| t > 0.0 && t.is_finite())
            .filter(|&t| {
                let g = self.mu(t) - self.threshold;
                (z == 0.0 || g.signum() == z.signum()) && self.mu_prime(t) - z * self.sigma_u_prime(t) > 0.0
            })
            .min_by(f64::total_cmp)
    }

    fn bisect(&self, z: f64, hi: f64) -> Result<f64> {
        let (mut lo, mut hi) = (0.0_f64, hi);
        while hi - lo > BISECTION_TOL.max(4.0 * f64::EPSILON * hi) {
            let mid = 0.5 * (lo + hi);
            if self.h(mid)? < z {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// A few Newton steps on `h(t) − z`, kept only while they improve the residual.
    fn polish(&self, mut t: f64, z: f64) -> f64 {
        let resid = |t: f64| self.h(t).map_or(f64::INFINITY, |h| (h - z).abs());
        let mut r = resid(t);
        for _ in 0..8 {
            if r < 1e-13 {
                break;
            }
            let s = self.sigma_u(t);
            let dh = (self.mu_prime(t) - z * self.sigma_u_prime(t)) / s;
            if !(dh > 0.0) {
                break;
            }
            let h = self.h(t).unwrap_or(z);
            let cand = t - (h - z) / dh;
            let rc = resid(cand);
            if cand > 0.0 && rc < r {
                t = cand;
                r = rc;
            } else {
                break;
            }
        }
        t
    }

    /// `(t, h(t), F_T(t))` over the given times, the data behind a failure-time plot.
    pub fn curve(&self, times: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
        let n = std_normal();
        times
            .iter()
            .map(|&t| {
                let h = self.h(t)?;
                Ok((t, h, n.cdf(h)))
            })
            .collect()
    }
}

/// Writes a failure-time curve as CSV with columns `t,h,F_T`.
pub fn write_curve_csv<W: Write>(out: W, curve: &[(f64, f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["t", "h", "F_T"]).map_err(err)?;
    for &(t, h, f) in curve {
        w.write_record([fmt_num(t), fmt_num(h), fmt_num(f)]).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// `t_α`, or the marker for a degenerate quantile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileTime {
    Finite(f64),
    /// `z_α ≤ h(0)`: a fraction α has failed already at time zero.
    AtZero,
    /// `z_α ≥ lim h`: the fraction α is never reached.
    Infinite,
}

impl QuantileTime {
    pub fn finite(self) -> Option<f64> {
        match self {
            QuantileTime::Finite(t) => Some(t),
            _ => None,
        }
    }
}

/// Delta-method ingredients at a non-degenerate quantile.
#[derive(Debug, Clone, Serialize)]
pub struct QuantileGradient {
    /// `1 / (μ′(t_α) − z_α σ_u′(t_α))`.
    pub c0: f64,
    /// `c_β = f(x_u, t_α)`.
    pub c_beta: Vec<f64>,
    /// `c_ς = −z_α ∂σ_u(t_α)/∂ς`.
    pub c_varsigma: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantileResult {
    pub alpha: f64,
    pub z_alpha: f64,
    pub t_alpha: QuantileTime,
    pub gradient: Option<QuantileGradient>,
}

/// Quantile of the scenario with its gradient.
pub fn quantile(s: &Scenario) -> Result<QuantileResult> {
    let prof = use_profile(s);
    let t_alpha = prof.quantile(s.alpha())?;
    let z = z_alpha(s.alpha());
    let gradient = match t_alpha {
        QuantileTime::Finite(t) => {
            let d = prof.mu_prime(t) - z * prof.sigma_u_prime(t);
            Some(QuantileGradient {
                c0: 1.0 / d,
                c_beta: s.model().f(s.use_condition(), t).as_slice().to_vec(),
                c_varsigma: gradient_varsigma(&prof, s.alpha(), t, s.parametrization(), s.variance_params())?,
            })
        }
        _ => None,
    };
    Ok(QuantileResult {
        alpha: s.alpha(),
        z_alpha: z,
        t_alpha,
        gradient,
    })
}

/// `c_ς = −z_α ∂σ_u(t)/∂ς`; zero for the median.
pub fn gradient_varsigma(
    prof: &UseConditionProfile,
    alpha: f64,
    t: f64,
    par: &dyn VarianceParametrization,
    params: &[f64],
) -> Result<Vec<f64>> {
    let z = z_alpha(alpha);
    let q = par.dim();
    if z == 0.0 {
        return Ok(vec![0.0; q]);
    }
    let f = prof.time_basis.eval(&[t]);
    let su = prof.sigma_u(t);
    (0..q)
        .map(|a| {
            let ds = match par.derivative(params, a, 1) {
                Some((dg, _)) => quad(&dg, &f) / (2.0 * su),
                None => fd_sigma_u(&f, par, params, a)?,
            };
            Ok(-z * ds)
        })
        .collect()
}

/// Central-difference version of [`gradient_varsigma`].
pub fn gradient_varsigma_fd(
    prof: &UseConditionProfile,
    alpha: f64,
    t: f64,
    par: &dyn VarianceParametrization,
    params: &[f64],
) -> Result<Vec<f64>> {
    let z = z_alpha(alpha);
    let f = prof.time_basis.eval(&[t]);
    (0..par.dim()).map(|a| Ok(-z * fd_sigma_u(&f, par, params, a)?)).collect()
}

fn fd_sigma_u(f: &DVector<f64>, par: &dyn VarianceParametrization, params: &[f64], a: usize) -> Result<f64> {
    let h = crate::model::fd_step(params[a]);
    let mut up = params.to_vec();
    let mut dn = params.to_vec();
    up[a] += h;
    dn[a] -= h;
    let su = quad(par.components(&up)?.sigma_gamma(), f).max(0.0).sqrt();
    let sd = quad(par.components(&dn)?.sigma_gamma(), f).max(0.0).sqrt();
    Ok((su - sd) / (2.0 * h))
}

/// Standardized (per unit) asymptotic variance of `t̂_α` with its two terms.
#[derive(Debug, Clone, Serialize)]
pub struct AvarReport {
    pub t_alpha: f64,
    pub c0: f64,
    /// `c0² c_βᵀ M_β⁻¹ c_β`.
    pub beta_term: f64,
    /// `c0² c_ςᵀ M_ς⁻¹ c_ς`.
    pub varsigma_term: f64,
    pub total: f64,
}

impl AvarReport {
    /// Asymptotic variance for `n` units.
    pub fn for_units(&self, n: usize) -> f64 {
        self.total / n as f64
    }
}

/// Per-unit inverse information of the time factor and the variance block.
#[derive(Debug, Clone)]
pub struct TimeInformation {
    /// `M̃2⁻¹`.
    pub m2_inverse: DMatrix<f64>,
    /// `M_ς` for a single unit.
    pub m_varsigma: DMatrix<f64>,
}

impl TimeInformation {
    /// Every unit measured at the same `k` times.
    pub fn repeated(s: &Scenario, times: &[f64]) -> Result<Self> {
        let f2 = build_time_matrix(times, s.model().time_basis())?;
        let m2_inverse = inverse_marginal_info(&f2, s.varcomps())?;
        let m_varsigma = if s.alpha() == 0.5 {
            DMatrix::zeros(s.parametrization().dim(), s.parametrization().dim())
        } else {
            info_varsigma(&f2, s.parametrization(), s.variance_params(), 1, DerivativeRoute::Analytic)?.matrix
        };
        Ok(Self { m2_inverse, m_varsigma })
    }
}

/// `aVar = c0² (c_βᵀ M_β⁻¹ c_β + c_ςᵀ M_ς⁻¹ c_ς)` for a stress design and measurement times,
/// with `M_β = M1(ξ) ⊗ M̃2` evaluated factor by factor.
pub fn avar_quantile(s: &Scenario, stress_design: &ApproximateDesign, times: &[f64]) -> Result<AvarReport> {
    let q = quantile(s)?;
    let ti = TimeInformation::repeated(s, times)?;
    avar_with(s, &q, stress_design, &ti)
}

pub(crate) fn avar_with(
    s: &Scenario,
    q: &QuantileResult,
    stress_design: &ApproximateDesign,
    ti: &TimeInformation,
) -> Result<AvarReport> {
    let (t, g) = match (q.t_alpha, &q.gradient) {
        (QuantileTime::Finite(t), Some(g)) => (t, g),
        (other, _) => {
            return Err(Error::DegenerateQuantile(format!(
                "the {}-quantile is {other:?}",
                q.alpha
            )))
        }
    };
    let m1 = stress_design.information(s.model().stress());
    let c1 = s.c_stress();
    let cv1 = c_value(&m1, &c1);
    if !cv1.feasible {
        return Err(Error::Infeasible("f1(x_u) is not estimable under the stress design".into()));
    }
    let f2 = s.model().f2(t);
    let stress_part = cv1.value;
    let time_part = quad(&ti.m2_inverse, &f2);
    let varsigma_quad = varsigma_quadratic(&ti.m_varsigma, &g.c_varsigma)?;
    let c02 = g.c0 * g.c0;
    let beta_term = c02 * stress_part * time_part;
    let varsigma_term = c02 * varsigma_quad;
    Ok(AvarReport {
        t_alpha: t,
        c0: g.c0,
        beta_term,
        varsigma_term,
        total: beta_term + varsigma_term,
    })
}

fn varsigma_quadratic(m: &DMatrix<f64>, c: &[f64]) -> Result<f64> {
    if c.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let cv = c_value(m, &DVector::from_column_slice(c));
    if !cv.feasible {
        return Err(Error::Infeasible("c_ς is not estimable: M_ς is singular".into()));
    }
    Ok(cv.value)
}

/// Same as [`avar_quantile`] but inverting the full `M_β` densely; used as a cross-check.
pub fn avar_quantile_dense(s: &Scenario, stress_design: &ApproximateDesign, times: &[f64]) -> Result<AvarReport> {
    let q = quantile(s)?;
    let ti = TimeInformation::repeated(s, times)?;
    let (t, g) = match (q.t_alpha, &q.gradient) {
        (QuantileTime::Finite(t), Some(g)) => (t, g),
        (other, _) => return Err(Error::DegenerateQuantile(format!("{other:?}"))),
    };
    let m1 = stress_design.information(s.model().stress());
    let f2 = build_time_matrix(times, s.model().time_basis())?;
    let v = crate::model::response_covariance(&f2, s.varcomps())?;
    let m2 = crate::model::marginal_info(&f2, &v)?;
    let mb = m1.kronecker(&m2);
    let c = kron_vec(&s.c_stress(), &s.model().f2(t));
    let (pinv, _) = sym_pinv(&mb);
    let c02 = g.c0 * g.c0;
    let beta_term = c02 * quad(&pinv, &c);
    let varsigma_term = c02 * varsigma_quadratic(&ti.m_varsigma, &g.c_varsigma)?;
    Ok(AvarReport {
        t_alpha: t,
        c0: g.c0,
        beta_term,
        varsigma_term,
        total: beta_term + varsigma_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use approx::assert_relative_eq;

    fn line_profile(delta: (f64, f64), s11: f64, s12: f64, s22: f64, y0: f64) -> UseConditionProfile {
        UseConditionProfile::new(
            vec![delta.0, delta.1],
            Basis::linear(),
            DMatrix::from_row_slice(2, 2, &[s11, s12, s12, s22]),
            y0,
        )
        .unwrap()
    }

    #[test]
    fn example_one_profile_and_median() {
        let s = presets::single_stress();
        let p = use_profile(&s);
        assert_relative_eq!(p.delta()[0], 2.306, epsilon = 5e-4);
        assert_relative_eq!(p.delta()[1], 1.014, epsilon = 5e-4);
        let t = p.quantile(0.5).unwrap().finite().unwrap();
        // displayed value is truncated, not rounded
        assert_relative_eq!(t, 1.583, epsilon = 1e-3);
        assert_relative_eq!(p.cdf(t).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn random_intercept_only_is_linear() {
        let p = line_profile((0.0, 1.0), 1.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(p.quantile(0.5).unwrap().finite().unwrap(), 1.0, epsilon = 1e-12);
        let z = z_alpha(0.8);
        assert_relative_eq!(p.quantile(0.8).unwrap().finite().unwrap(), 1.0 + z, epsilon = 1e-10);
        assert_eq!(p.h_limit(), f64::INFINITY);
    }

    #[test]
    fn degenerate_markers() {
        let p = line_profile((0.0, 1.0), 1.0, 0.0, 1.0, 1.0);
        // h(0) = -1, lim h = 1
        assert_eq!(p.quantile(0.1).unwrap(), QuantileTime::AtZero);
        assert_eq!(p.quantile(0.9).unwrap(), QuantileTime::Infinite);
        assert!(matches!(p.quantile(0.5).unwrap(), QuantileTime::Finite(_)));
    }

    #[test]
    fn median_has_zero_varsigma_gradient() {
        let s = presets::single_stress();
        let q = quantile(&s).unwrap();
        assert!(q.gradient.unwrap().c_varsigma.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rho_component_closed_form() {
        let s = presets::single_stress().with_alpha(0.1).unwrap();
        let q = quantile(&s).unwrap();
        let t = q.t_alpha.finite().unwrap();
        let p = use_profile(&s);
        let (s1, s2) = (s.variance_params()[0], s.variance_params()[1]);
        let want = -q.z_alpha * s1 * s2 * t / p.sigma_u(t);
        assert_relative_eq!(q.gradient.unwrap().c_varsigma[2], want, max_relative = 1e-12);
    }

    #[test]
    fn nonmonotone_h_is_reported() {
        // rises to h(5) = 4/sqrt(14), then falls back to the limit 1
        let p = line_profile((0.0, 1.0), 4.0, -1.5, 1.0, 1.0);
        assert_relative_eq!(p.h_limit(), 1.0);
        let alpha = std_normal().cdf(1.03);
        assert!(matches!(p.quantile(alpha), Err(Error::Ambiguous { .. })));
        assert!(matches!(p.quantile(0.6), Ok(QuantileTime::Finite(_))));
        // dips below h(0) before rising
        let p = line_profile((0.0, 1.0), 1.0, -1.2, 2.0, 1.0);
        assert!(matches!(p.quantile(0.5), Err(Error::Ambiguous { .. })));
    }

    #[test]
    fn five_percent_rule() {
        for s1 in [0.2, 0.5, 0.6, 0.61, 0.7, 1.0] {
            let p = line_profile((0.0, 1.0), s1 * s1, 0.0, 0.01, 1.0);
            let positive = matches!(p.quantile(0.05).unwrap(), QuantileTime::Finite(_));
            assert_eq!(positive, s1 < 0.608 * 1.0, "sigma1 = {s1}");
        }
    }
}
