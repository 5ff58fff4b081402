//! c-optimal stress designs for extrapolation to the normal use condition.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::design::{
    c_criterion, certificate_gap, efficiency_from_values, product_design, ApproximateDesign, DesignReport,
};
use crate::error::{Error, Result};
use crate::failure::{quantile, QuantileTime, TimeInformation};
use crate::lp::elfving_lp;
use crate::model::{BasisKind, Regression, Scenario};

/// Candidate points per stress axis unless specified otherwise.
pub const DEFAULT_GRID: usize = 101;
/// Elfving weights below this are dropped.
const WEIGHT_DROP: f64 = 1e-10;

/// `w* = |x_u| / (1 + 2|x_u|)` at 1 and `1 − w*` at 0, c-optimal for straight-line
/// extrapolation from `[0, 1]` to `x_u ≤ 0`.
pub fn extrapolation_two_point(x_u: f64) -> Result<ApproximateDesign> {
    if !(x_u <= 0.0) || !x_u.is_finite() {
        return Err(Error::Domain(format!("use condition {x_u} must be a finite value <= 0")));
    }
    let a = x_u.abs();
    let w = a / (1.0 + 2.0 * a);
    if w == 0.0 {
        return Ok(ApproximateDesign::one_point(vec![0.0]));
    }
    ApproximateDesign::new(vec![vec![0.0], vec![1.0]], vec![1.0 - w, w])
}

/// `Φ_c(ξ*) = (1 + 2|x_u|)²`.
pub fn extrapolation_criterion(x_u: f64) -> f64 {
    let s = 1.0 + 2.0 * x_u.abs();
    s * s
}

/// Elfving construction on a candidate set.
#[derive(Debug, Clone, Serialize)]
pub struct ElfvingSolution {
    pub lambda_c: f64,
    pub design: ApproximateDesign,
    /// `z_i ∈ {−1, +1}` for each support point.
    pub signs: Vec<i8>,
    /// `1/λ_c²`.
    pub criterion: f64,
    /// Normal `u` of the supporting hyperplane at `λ_c c`: `|f(x)ᵀu| ≤ 1` on the candidates and
    /// `cᵀu = 1/λ_c`.
    pub hyperplane: Vec<f64>,
}

/// Solves `max λ` subject to `λ c ∈ conv{±f(x_i)}` over the candidates.
pub fn elfving_solve<R: Regression + ?Sized>(reg: &R, candidates: &[Vec<f64>], c: &DVector<f64>) -> Result<ElfvingSolution> {
    if c.len() != reg.dim() {
        return Err(Error::InvalidInput(format!("c has length {}, basis dimension is {}", c.len(), reg.dim())));
    }
    let f: Vec<DVector<f64>> = candidates.iter().map(|x| reg.features(x)).collect();
    let lp = elfving_lp(&f, c)?;
    let lambda_c = 1.0 / lp.value;
    // prefer a one-point representation when λ_c c is itself ± a candidate vector
    let target = c * lambda_c;
    let tol = 1e-9 * target.amax().max(1.0);
    for (x, fx) in candidates.iter().zip(&f) {
        for z in [1i8, -1] {
            if (fx * f64::from(z) - &target).amax() <= tol {
                return Ok(ElfvingSolution {
                    lambda_c,
                    design: ApproximateDesign::one_point(x.clone()),
                    signs: vec![z],
                    criterion: lp.value * lp.value,
                    hyperplane: lp.dual.as_slice().to_vec(),
                });
            }
        }
    }
    let mut support = Vec::new();
    let mut weights = Vec::new();
    let mut signs = Vec::new();
    for (x, &a) in candidates.iter().zip(&lp.coef) {
        let w = a.abs() * lambda_c;
        if w >= WEIGHT_DROP {
            support.push(x.clone());
            weights.push(w);
            signs.push(if a > 0.0 { 1 } else { -1 });
        }
    }
    let design = ApproximateDesign::normalized(support.clone(), weights)?;
    // merging may have combined points; realign signs with the merged support
    let signs = design
        .support()
        .iter()
        .map(|x| {
            support
                .iter()
                .position(|s| s == x)
                .map_or(1, |i| signs[i])
        })
        .collect();
    Ok(ElfvingSolution {
        lambda_c,
        criterion: lp.value * lp.value,
        design,
        signs,
        hyperplane: lp.dual.as_slice().to_vec(),
    })
}

/// Equivalence-theorem gap; at most 1e-6 for a c-optimal design on the candidates.
pub fn verify_c_optimality<R: Regression + ?Sized>(
    design: &ApproximateDesign,
    reg: &R,
    candidates: &[Vec<f64>],
    c: &DVector<f64>,
) -> f64 {
    certificate_gap(design, reg, c, candidates)
}

/// Member `ξ_a` of the family of c-optimal vertex designs for the additive model
/// `(1, x1, x2)` on `[0, 1]²` with both use coordinates negative.
pub fn additive_family(x_u1: f64, x_u2: f64, a: f64) -> Result<ApproximateDesign> {
    if !(x_u1 < 0.0 && x_u2 < 0.0) {
        return Err(Error::Domain("both use-condition coordinates must be negative".into()));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidInput(format!("family parameter {a} must lie in [0, 1]")));
    }
    if x_u1 == x_u2 {
        return Err(Error::InvalidInput(
            "equal use-condition coordinates: no vertex design family exists; use the uniform vertex design only as a benchmark".into(),
        ));
    }
    // u is the coordinate farther from the region
    let swap = x_u2 < x_u1;
    let (u, v) = if swap { (x_u2.abs(), x_u1.abs()) } else { (x_u1.abs(), x_u2.abs()) };
    let lam = 1.0 / (1.0 + 2.0 * u);
    let w = [
        (1.0 + a * u + (1.0 - a) * v) * lam,
        (1.0 - a) * (u - v) * lam,
        a * (u - v) * lam,
        ((1.0 - a) * u + a * v) * lam,
    ];
    let mut pts = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    if swap {
        for p in &mut pts {
            p.swap(0, 1);
        }
    }
    ApproximateDesign::normalized(pts, w.to_vec())
}

/// Whether every stress factor is a straight line on `[0, 1]`, so the optimum is the product
/// of two-point extrapolation designs.
fn closed_form_applies(s: &Scenario) -> bool {
    s.model().stress().factors().iter().all(|b| {
        matches!(b.kind(), BasisKind::Linear) && b.region().bounds() == [(0.0, 1.0)]
    }) && s.use_condition().iter().all(|x| *x <= 0.0)
}

/// c-optimal stress design for extrapolation to `x_u`: closed-form products for straight-line
/// factors on `[0, 1]`, the Elfving LP on a grid otherwise.
pub fn extrapolation_design(s: &Scenario, grid_per_axis: usize) -> Result<ApproximateDesign> {
    if closed_form_applies(s) {
        let mut it = s.use_condition().iter();
        let first = extrapolation_two_point(*it.next().expect("at least one stress"))?;
        return it.try_fold(first, |acc, &x| Ok(product_design(&acc, &extrapolation_two_point(x)?)));
    }
    let reg = s.model().stress();
    let candidates = reg.region().grid(grid_per_axis);
    Ok(elfving_solve(reg, &candidates, &s.c_stress())?.design)
}

/// c-optimal stress design for estimating `t_α`; it extrapolates to `x_u` and does not depend
/// on `α`.
///
/// Product-of-lines models use the closed form; other models solve the Elfving LP on a grid
/// with `grid_per_axis` points per stress axis. When `times` is nonempty the standardized
/// asymptotic variance is reported among the benchmarks.
pub fn optimal_stress_for_quantile(s: &Scenario, grid_per_axis: usize, times: &[f64]) -> Result<DesignReport> {
    let q = quantile(s)?;
    if let QuantileTime::AtZero | QuantileTime::Infinite = q.t_alpha {
        return Err(Error::DegenerateQuantile(format!(
            "the {}-quantile is {:?}",
            s.alpha(),
            q.t_alpha
        )));
    }
    let reg = s.model().stress();
    let c = s.c_stress();
    let region = reg.region();
    let candidates = region.grid(grid_per_axis);
    let mut notes = vec![format!(
        "optimal for every quantile level alpha (extrapolation to x_u only); evaluated at alpha = {}",
        s.alpha()
    )];
    notes.push(if closed_form_applies(s) {
        "product of closed-form two-point extrapolation designs".to_string()
    } else {
        format!("Elfving LP on a {grid_per_axis}-point-per-axis grid")
    });
    let design = extrapolation_design(s, grid_per_axis)?;
    let crit = c_criterion(&design, reg, &c);
    if crit.non_estimable_full_model {
        notes.push("information matrix is singular: the full model cannot be fitted from this design alone".into());
    }
    let gap = certificate_gap(&design, reg, &c, &candidates);
    let mut benchmarks = BTreeMap::new();
    let vertices = ApproximateDesign::uniform(region.grid(2))?;
    let eff_vertices = efficiency_from_values(crit.value, c_criterion(&vertices, reg, &c));
    benchmarks.insert("efficiency_uniform_vertices".to_string(), eff_vertices.value);
    if !times.is_empty() {
        let ti = TimeInformation::repeated(s, times)?;
        let av = crate::failure::avar_with(s, &q, &design, &ti)?;
        benchmarks.insert("avar_standardized".to_string(), av.total);
        if let Ok(avb) = crate::failure::avar_with(s, &q, &vertices, &ti) {
            benchmarks.insert("avar_standardized_uniform_vertices".to_string(), avb.total);
        }
    }
    Ok(DesignReport {
        design,
        criterion: crit,
        efficiency: 1.0,
        certificate_gap: gap,
        benchmarks,
        notes,
    })
}
