//! Design matrices, response covariance, likelihood, estimators and information blocks.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::basis::Basis;
use super::variance::{VarianceComponents, VarianceParametrization};
use super::ProductModel;
use crate::error::{Error, Result};
use crate::linalg::{kron, rcond_sym, spd_inverse, spd_logdet, symmetrize, RCOND_MIN};

/// `F2`: row `j` is `f2(t_j)`.
pub fn build_time_matrix(times: &[f64], basis: &Basis) -> Result<DMatrix<f64>> {
    if times.is_empty() {
        return Err(Error::InvalidInput("time plan is empty".into()));
    }
    let rows = times
        .iter()
        .map(|&t| basis.eval_in_region(&[t]))
        .collect::<Result<Vec<_>>>()?;
    Ok(stack_rows(&rows))
}

/// `F1`: row `i` is `f1(x_i)`.
pub fn build_stress_matrix(settings: &[Vec<f64>], model: &ProductModel) -> Result<DMatrix<f64>> {
    if settings.is_empty() {
        return Err(Error::InvalidInput("no stress settings".into()));
    }
    let d = model.stress_input_dim();
    let region = model.stress().region();
    let mut rows = Vec::with_capacity(settings.len());
    for x in settings {
        if x.len() != d {
            return Err(Error::Domain(format!("stress setting {x:?} has {} coordinates, expected {d}", x.len())));
        }
        if !region.contains(x) {
            return Err(Error::Domain(format!("stress setting {x:?} lies outside the experimental region")));
        }
        rows.push(model.f1(x));
    }
    Ok(stack_rows(&rows))
}

/// Stacks row vectors into a matrix.
pub fn stack_rows(rows: &[DVector<f64>]) -> DMatrix<f64> {
    let p = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

/// `V = F2 Σγ F2ᵀ + Σε`.
pub fn response_covariance(f2: &DMatrix<f64>, vc: &VarianceComponents) -> Result<DMatrix<f64>> {
    let k = f2.nrows();
    if f2.ncols() != vc.random_effect_dim() {
        return Err(Error::InvalidInput(format!(
            "F2 has {} columns, Σγ is {1}x{1}",
            f2.ncols(),
            vc.random_effect_dim()
        )));
    }
    let v = symmetrize(&(f2 * vc.sigma_gamma() * f2.transpose() + vc.sigma_eps_matrix(k)?));
    let rc = rcond_sym(&v);
    if !(rc >= RCOND_MIN) {
        return Err(Error::DegenerateVariance(format!(
            "response covariance is not positive definite (rcond {rc:.3e})"
        )));
    }
    Ok(v)
}

/// `F2ᵀ V⁻¹ F2` by direct inversion of `V`.
pub fn marginal_info(f2: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let vinv = spd_inverse(v, "V")?;
    Ok(symmetrize(&(f2.transpose() * vinv * f2)))
}

/// `(F2ᵀ V⁻¹ F2)⁻¹ = (F2ᵀ Σε⁻¹ F2)⁻¹ + Σγ`.
pub fn inverse_marginal_info(f2: &DMatrix<f64>, vc: &VarianceComponents) -> Result<DMatrix<f64>> {
    let k = f2.nrows();
    let seinv = spd_inverse(&vc.sigma_eps_matrix(k)?, "Σε")?;
    let m = symmetrize(&(f2.transpose() * seinv * f2));
    let minv = spd_inverse(&m, "F2ᵀΣε⁻¹F2")?;
    Ok(symmetrize(&(minv + vc.sigma_gamma())))
}

/// Gaussian log-likelihood with mean `(F1 ⊗ F2) β` and covariance `I_n ⊗ V`.
///
/// `y` is `n x k`: row `i` holds the `k` measurements of unit `i`.
pub fn log_likelihood(
    beta: &DVector<f64>,
    f1: &DMatrix<f64>,
    f2: &DMatrix<f64>,
    v: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<f64> {
    let (n, k) = (f1.nrows(), f2.nrows());
    check_obs(y, n, k)?;
    if beta.len() != f1.ncols() * f2.ncols() {
        return Err(Error::InvalidInput("beta length does not match p1*p2".into()));
    }
    let b = beta_matrix(beta, f1.ncols(), f2.ncols());
    let resid = y - f1 * b * f2.transpose();
    let vinv = spd_inverse(v, "V")?;
    let logdet = spd_logdet(v, "V")?;
    let s = resid.transpose() * &resid;
    let quad = (vinv.component_mul(&s)).sum();
    let nk = (n * k) as f64;
    Ok(-0.5 * nk * (2.0 * PI).ln() - 0.5 * n as f64 * logdet - 0.5 * quad)
}

/// Generalized least squares, `((F1ᵀF1)⁻¹F1ᵀ ⊗ (F2ᵀV⁻¹F2)⁻¹F2ᵀV⁻¹) y`; this is the ML
/// estimator of `β` for known `V`.
pub fn gls_estimate(
    y: &DMatrix<f64>,
    f1: &DMatrix<f64>,
    f2: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    check_obs(y, f1.nrows(), f2.nrows())?;
    let vinv = spd_inverse(v, "V")?;
    let m2 = symmetrize(&(f2.transpose() * &vinv * f2));
    let g = spd_inverse(&m2, "F2ᵀV⁻¹F2")? * f2.transpose() * vinv;
    fit_kron(y, f1, &g)
}

/// Ordinary least squares, `((F1ᵀF1)⁻¹F1ᵀ ⊗ (F2ᵀF2)⁻¹F2ᵀ) y`.
pub fn ols_estimate(y: &DMatrix<f64>, f1: &DMatrix<f64>, f2: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_obs(y, f1.nrows(), f2.nrows())?;
    let g = spd_inverse(&(f2.transpose() * f2), "F2ᵀF2")? * f2.transpose();
    fit_kron(y, f1, &g)
}

fn fit_kron(y: &DMatrix<f64>, f1: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DVector<f64>> {
    let h = spd_inverse(&(f1.transpose() * f1), "F1ᵀF1")? * f1.transpose();
    let b = h * y * g.transpose();
    // lexicographic: index (r, s) -> r * p2 + s
    Ok(DVector::from_iterator(b.len(), b.transpose().iter().copied()))
}

fn beta_matrix(beta: &DVector<f64>, p1: usize, p2: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p1, p2, |r, s| beta[r * p2 + s])
}

fn check_obs(y: &DMatrix<f64>, n: usize, k: usize) -> Result<()> {
    if y.nrows() != n || y.ncols() != k {
        return Err(Error::InvalidInput(format!(
            "observations are {}x{}, expected {n} units x {k} times",
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(())
}

/// `M_β = (F1ᵀF1) ⊗ (F2ᵀV⁻¹F2)`.
pub fn info_beta(f1: &DMatrix<f64>, f2: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m1 = symmetrize(&(f1.transpose() * f1));
    Ok(kron(&m1, &marginal_info(f2, v)?))
}

/// `M_β⁻¹ = (F1ᵀF1)⁻¹ ⊗ (F2ᵀV⁻¹F2)⁻¹`; a singular factor is named in the error.
pub fn info_beta_inverse(f1: &DMatrix<f64>, f2: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m1inv = spd_inverse(&symmetrize(&(f1.transpose() * f1)), "F1ᵀF1 (stress factor)")?;
    let m2inv = spd_inverse(&marginal_info(f2, v)?, "F2ᵀV⁻¹F2 (time factor)")?;
    Ok(kron(&m1inv, &m2inv))
}

/// How `∂V/∂ς` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeRoute {
    /// Analytic when the parametrization provides it, central differences otherwise.
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct VarsigmaInfo {
    pub matrix: DMatrix<f64>,
    /// False when `M_ς` is numerically singular.
    pub identifiable: bool,
    pub rcond: f64,
}

/// `M_ς`, entries `(n/2) tr(V⁻¹ ∂_a V V⁻¹ ∂_b V)`.
pub fn info_varsigma(
    f2: &DMatrix<f64>,
    par: &dyn VarianceParametrization,
    params: &[f64],
    n: usize,
    route: DerivativeRoute,
) -> Result<VarsigmaInfo> {
    let q = par.dim();
    if params.len() != q {
        return Err(Error::InvalidInput(format!("expected {q} variance parameters, got {}", params.len())));
    }
    let vc = par.components(params)?;
    let v = response_covariance(f2, &vc)?;
    let vinv = spd_inverse(&v, "V")?;
    let mut a_mats = Vec::with_capacity(q);
    for a in 0..q {
        let dv = dv_dparam(f2, par, params, a, route)?;
        a_mats.push(&vinv * dv);
    }
    let mut m = DMatrix::zeros(q, q);
    for a in 0..q {
        for b in a..q {
            // tr(A B) = Σ_ij A_ij B_ji
            let t = a_mats[a].component_mul(&a_mats[b].transpose()).sum();
            m[(a, b)] = 0.5 * n as f64 * t;
            m[(b, a)] = m[(a, b)];
        }
    }
    let rcond = if q == 0 { 1.0 } else { rcond_sym(&m) };
    Ok(VarsigmaInfo {
        matrix: m,
        identifiable: rcond >= RCOND_MIN,
        rcond,
    })
}

/// `∂V/∂ς_a` for the time plan with design matrix `F2`.
pub(crate) fn dv_dparam(
    f2: &DMatrix<f64>,
    par: &dyn VarianceParametrization,
    params: &[f64],
    a: usize,
    route: DerivativeRoute,
) -> Result<DMatrix<f64>> {
    let k = f2.nrows();
    if route == DerivativeRoute::Analytic {
        if let Some((dg, de)) = par.derivative(params, a, k) {
            return Ok(f2 * dg * f2.transpose() + de);
        }
    }
    let h = fd_step(params[a]);
    let mut up = params.to_vec();
    let mut dn = params.to_vec();
    up[a] += h;
    dn[a] -= h;
    let vu = raw_covariance(f2, &par.components(&up)?, k)?;
    let vd = raw_covariance(f2, &par.components(&dn)?, k)?;
    Ok((vu - vd) / (2.0 * h))
}

/// Central-difference step: relative 1e-5 with absolute floor 1e-8.
pub(crate) fn fd_step(x: f64) -> f64 {
    (1e-5 * x.abs()).max(1e-8)
}

fn raw_covariance(f2: &DMatrix<f64>, vc: &VarianceComponents, k: usize) -> Result<DMatrix<f64>> {
    Ok(f2 * vc.sigma_gamma() * f2.transpose() + vc.sigma_eps_matrix(k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_rel_dev;
    use crate::model::{ErrorCovariance, ErrorVarianceOnly, InterceptSlopeStdDev};
    use approx::assert_relative_eq;

    fn lin_f2(times: &[f64]) -> DMatrix<f64> {
        build_time_matrix(times, &Basis::linear()).unwrap()
    }

    #[test]
    fn time_matrix_rows() {
        let f2 = lin_f2(&[0.0, 0.5, 1.0]);
        assert_eq!(f2.column(1).as_slice(), &[0.0, 0.5, 1.0]);
        assert_eq!(f2.column(0).as_slice(), &[1.0, 1.0, 1.0]);
        assert!(matches!(build_time_matrix(&[1.5], &Basis::linear()), Err(Error::Domain(_))));
    }

    #[test]
    fn stress_matrix_interaction_and_additive() {
        let m = ProductModel::new(vec![Basis::linear(), Basis::linear()], Basis::linear()).unwrap();
        let f1 = build_stress_matrix(&[vec![0.3, 0.7]], &m).unwrap();
        assert_relative_eq!(f1.row(0).transpose(), DVector::from_vec(vec![1.0, 0.7, 0.3, 0.21]), epsilon = 1e-15);
        let a = ProductModel::new(vec![Basis::additive(2).unwrap()], Basis::linear()).unwrap();
        let f1 = build_stress_matrix(&[vec![1.0, 1.0]], &a).unwrap();
        assert_eq!(f1.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0, 1.0]);
        assert!(build_stress_matrix(&[vec![0.5]], &a).is_err());
    }

    #[test]
    fn covariance_hand_example() {
        let vc = VarianceComponents::intercept_slope(1.0, 1.0, 0.0, 1.0).unwrap();
        let v = response_covariance(&lin_f2(&[0.0, 1.0]), &vc).unwrap();
        assert_eq!(v, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]));
        let direct = spd_inverse(&marginal_info(&lin_f2(&[0.0, 1.0]), &v).unwrap(), "m").unwrap();
        let lemma = inverse_marginal_info(&lin_f2(&[0.0, 1.0]), &vc).unwrap();
        assert!(max_rel_dev(&direct, &lemma) < 1e-12);
    }

    #[test]
    fn covariance_diagonal_closed_form() {
        let (s1, s2, rho, se) = (0.114, 0.105, -0.143, 0.048);
        let times: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let vc = VarianceComponents::intercept_slope(s1, s2, rho, se).unwrap();
        let v = response_covariance(&lin_f2(&times), &vc).unwrap();
        for (j, t) in times.iter().enumerate() {
            let want = s1 * s1 + 2.0 * rho * s1 * s2 * t + s2 * s2 * t * t + se * se;
            assert_relative_eq!(v[(j, j)], want, max_relative = 1e-14);
        }
    }

    #[test]
    fn likelihood_special_cases() {
        let f1 = DMatrix::from_element(1, 1, 1.0);
        let f2 = DMatrix::from_element(1, 1, 1.0);
        let v = DMatrix::from_element(1, 1, 1.0);
        let beta = DVector::from_element(1, 2.0);
        let y = DMatrix::from_element(1, 1, 3.0);
        let l = log_likelihood(&beta, &f1, &f2, &v, &y).unwrap();
        assert_relative_eq!(l, -0.5 * (2.0 * PI).ln() - 0.5, epsilon = 1e-14);
    }

    #[test]
    fn gls_equals_ols_for_scalar_errors() {
        let m = ProductModel::new(vec![Basis::linear()], Basis::linear()).unwrap();
        let f1 = build_stress_matrix(&[vec![0.0], vec![0.3], vec![1.0]], &m).unwrap();
        let f2 = lin_f2(&[0.0, 0.2, 0.6, 1.0]);
        let vc = VarianceComponents::new(
            DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.3]),
            ErrorCovariance::Homoscedastic { variance: 0.2 },
        )
        .unwrap();
        let v = response_covariance(&f2, &vc).unwrap();
        let y = DMatrix::from_fn(3, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.37 - 0.4);
        let g = gls_estimate(&y, &f1, &f2, &v).unwrap();
        let o = ols_estimate(&y, &f1, &f2).unwrap();
        assert_relative_eq!(g, o, epsilon = 1e-10);
    }

    #[test]
    fn varsigma_info_scalar_error_case() {
        let f2 = lin_f2(&[0.0, 0.5, 1.0]);
        let par = ErrorVarianceOnly {
            sigma_gamma: DMatrix::zeros(2, 2),
        };
        let s2 = 0.3;
        let info = info_varsigma(&f2, &par, &[s2], 10, DerivativeRoute::Analytic).unwrap();
        assert_relative_eq!(info.matrix[(0, 0)], 10.0 * 3.0 / (2.0 * s2 * s2), max_relative = 1e-12);
        let double = info_varsigma(&f2, &par, &[s2], 20, DerivativeRoute::Analytic).unwrap();
        assert_eq!(double.matrix[(0, 0)], 2.0 * info.matrix[(0, 0)]);
    }

    #[test]
    fn varsigma_info_analytic_matches_fd() {
        let times: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let f2 = lin_f2(&times);
        let p = [0.114, 0.105, -0.143, 0.048];
        let a = info_varsigma(&f2, &InterceptSlopeStdDev, &p, 1, DerivativeRoute::Analytic).unwrap();
        let fd = info_varsigma(&f2, &InterceptSlopeStdDev, &p, 1, DerivativeRoute::FiniteDifference).unwrap();
        assert!(max_rel_dev(&a.matrix, &fd.matrix) < 1e-6);
        assert!(a.identifiable);
    }

    #[test]
    fn singular_stress_factor_is_named() {
        let f1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 1.0, 0.5]);
        let f2 = lin_f2(&[0.0, 1.0]);
        let v = DMatrix::identity(2, 2);
        match info_beta_inverse(&f1, &f2, &v) {
            Err(Error::Singular { what, .. }) => assert!(what.contains("stress")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
