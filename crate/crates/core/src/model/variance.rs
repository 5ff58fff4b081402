use std::fmt::Debug;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{eig_range, symmetrize};

/// Covariance of the measurement errors within one unit.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorCovariance {
    /// `σε² I_k`.
    Homoscedastic { variance: f64 },
    /// `σε²` on the diagonal and `ρ σε²` off it.
    CompoundSymmetric { variance: f64, rho: f64 },
    /// Explicit `k × k` matrix.
    Full(DMatrix<f64>),
}

impl ErrorCovariance {
    pub fn matrix(&self, k: usize) -> Result<DMatrix<f64>> {
        match self {
            ErrorCovariance::Homoscedastic { variance } => Ok(DMatrix::identity(k, k) * *variance),
            ErrorCovariance::CompoundSymmetric { variance, rho } => Ok(DMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    *variance
                } else {
                    rho * variance
                }
            })),
            ErrorCovariance::Full(m) => {
                if m.nrows() != k || m.ncols() != k {
                    return Err(Error::Domain(format!(
                        "error covariance is {}x{}, time plan has {k} points",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                Ok(m.clone())
            }
        }
    }

    /// Variance of a single measurement, when the structure does not depend on `k`.
    pub fn scalar_variance(&self) -> Option<f64> {
        match self {
            ErrorCovariance::Homoscedastic { variance } => Some(*variance),
            ErrorCovariance::CompoundSymmetric { variance, .. } => Some(*variance),
            ErrorCovariance::Full(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ErrorCovariance::Homoscedastic { variance } => {
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(Error::DegenerateVariance(format!("error variance {variance} must be > 0")));
                }
            }
            ErrorCovariance::CompoundSymmetric { variance, rho } => {
                if !(*variance > 0.0) || !(*rho > -1.0 && *rho < 1.0) {
                    return Err(Error::DegenerateVariance(format!(
                        "compound symmetry needs variance > 0 and |rho| < 1, got ({variance}, {rho})"
                    )));
                }
            }
            ErrorCovariance::Full(m) => {
                if m.nrows() != m.ncols() || (m - m.transpose()).amax() > 1e-10 * m.amax().max(1.0) {
                    return Err(Error::InvalidInput("error covariance must be square symmetric".into()));
                }
                if eig_range(m).0 <= 0.0 {
                    return Err(Error::DegenerateVariance("error covariance is not positive definite".into()));
                }
            }
        }
        Ok(())
    }
}

/// Random-effects covariance `Σγ` and error covariance `Σε`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceComponents {
    sigma_gamma: DMatrix<f64>,
    sigma_eps: ErrorCovariance,
}

impl VarianceComponents {
    pub fn new(sigma_gamma: DMatrix<f64>, sigma_eps: ErrorCovariance) -> Result<Self> {
        if sigma_gamma.nrows() != sigma_gamma.ncols() || sigma_gamma.nrows() == 0 {
            return Err(Error::InvalidInput("Σγ must be square and non-empty".into()));
        }
        let scale = sigma_gamma.amax().max(1.0);
        if (&sigma_gamma - sigma_gamma.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidInput("Σγ must be symmetric".into()));
        }
        if eig_range(&sigma_gamma).0 < -1e-12 * scale {
            return Err(Error::DegenerateVariance("Σγ has a negative eigenvalue".into()));
        }
        sigma_eps.validate()?;
        Ok(Self {
            sigma_gamma: symmetrize(&sigma_gamma),
            sigma_eps,
        })
    }

    /// Random intercept and slope with standard deviations `σ1`, `σ2`, correlation `ρ`,
    /// and homoscedastic errors with standard deviation `σε`.
    pub fn intercept_slope(s1: f64, s2: f64, rho: f64, s_eps: f64) -> Result<Self> {
        if !(s1 >= 0.0 && s2 >= 0.0) {
            return Err(Error::InvalidInput(format!("standard deviations must be >= 0, got ({s1}, {s2})")));
        }
        if !(rho.abs() <= 1.0) {
            return Err(Error::InvalidInput(format!("correlation {rho} outside [-1, 1]")));
        }
        let c = rho * s1 * s2;
        Self::new(
            DMatrix::from_row_slice(2, 2, &[s1 * s1, c, c, s2 * s2]),
            ErrorCovariance::Homoscedastic { variance: s_eps * s_eps },
        )
    }

    pub fn sigma_gamma(&self) -> &DMatrix<f64> {
        &self.sigma_gamma
    }

    pub fn sigma_eps(&self) -> &ErrorCovariance {
        &self.sigma_eps
    }

    pub fn sigma_eps_matrix(&self, k: usize) -> Result<DMatrix<f64>> {
        self.sigma_eps.matrix(k)
    }

    pub fn random_effect_dim(&self) -> usize {
        self.sigma_gamma.nrows()
    }

    pub fn with_sigma_gamma(&self, sigma_gamma: DMatrix<f64>) -> Result<Self> {
        Self::new(sigma_gamma, self.sigma_eps.clone())
    }
}

/// Maps a parameter vector `ς` to variance components.
///
/// Derivatives are with respect to the natural parameters; the unconstrained map is used by
/// the likelihood optimizer.
pub trait VarianceParametrization: Debug + Send + Sync {
    fn names(&self) -> Vec<String>;

    fn dim(&self) -> usize {
        self.names().len()
    }

    fn components(&self, params: &[f64]) -> Result<VarianceComponents>;

    /// Analytic `(∂Σγ/∂ς_a, ∂Σε/∂ς_a)`, if available.
    fn derivative(&self, _params: &[f64], _a: usize, _k: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        None
    }

    fn to_unconstrained(&self, params: &[f64]) -> Vec<f64>;

    fn from_unconstrained(&self, u: &[f64]) -> Vec<f64>;
}

/// `ς = (σ1, σ2, ρ, σε)` for a random intercept and slope with homoscedastic errors.
#[derive(Debug, Clone, Copy, Default)]
pub struct InterceptSlopeStdDev;

impl VarianceParametrization for InterceptSlopeStdDev {
    fn names(&self) -> Vec<String> {
        ["sigma1", "sigma2", "rho", "sigma_eps"].iter().map(|s| s.to_string()).collect()
    }

    fn components(&self, p: &[f64]) -> Result<VarianceComponents> {
        if p.len() != 4 {
            return Err(Error::InvalidInput(format!("expected 4 variance parameters, got {}", p.len())));
        }
        VarianceComponents::intercept_slope(p[0], p[1], p[2], p[3])
    }

    fn derivative(&self, p: &[f64], a: usize, k: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let (s1, s2, rho, se) = (p[0], p[1], p[2], p[3]);
        let zero_g = DMatrix::zeros(2, 2);
        let zero_e = DMatrix::zeros(k, k);
        let out = match a {
            0 => (DMatrix::from_row_slice(2, 2, &[2.0 * s1, rho * s2, rho * s2, 0.0]), zero_e),
            1 => (DMatrix::from_row_slice(2, 2, &[0.0, rho * s1, rho * s1, 2.0 * s2]), zero_e),
            2 => (DMatrix::from_row_slice(2, 2, &[0.0, s1 * s2, s1 * s2, 0.0]), zero_e),
            3 => (zero_g, DMatrix::identity(k, k) * (2.0 * se)),
            _ => return None,
        };
        Some(out)
    }

    fn to_unconstrained(&self, p: &[f64]) -> Vec<f64> {
        let rho = p[2].clamp(-1.0 + 1e-9, 1.0 - 1e-9);
        vec![p[0].max(1e-300).ln(), p[1].max(1e-300).ln(), rho.atanh(), p[3].max(1e-300).ln()]
    }

    fn from_unconstrained(&self, u: &[f64]) -> Vec<f64> {
        vec![u[0].exp(), u[1].exp(), u[2].tanh(), u[3].exp()]
    }
}

/// `ς = (σε²)` with a fixed random-effects covariance.
#[derive(Debug, Clone)]
pub struct ErrorVarianceOnly {
    pub sigma_gamma: DMatrix<f64>,
}

impl VarianceParametrization for ErrorVarianceOnly {
    fn names(&self) -> Vec<String> {
        vec!["sigma_eps_sq".into()]
    }

    fn components(&self, p: &[f64]) -> Result<VarianceComponents> {
        if p.len() != 1 {
            return Err(Error::InvalidInput("expected a single error variance".into()));
        }
        VarianceComponents::new(self.sigma_gamma.clone(), ErrorCovariance::Homoscedastic { variance: p[0] })
    }

    fn derivative(&self, _p: &[f64], a: usize, k: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let n = self.sigma_gamma.nrows();
        (a == 0).then(|| (DMatrix::zeros(n, n), DMatrix::identity(k, k)))
    }

    fn to_unconstrained(&self, p: &[f64]) -> Vec<f64> {
        vec![p[0].max(1e-300).ln()]
    }

    fn from_unconstrained(&self, u: &[f64]) -> Vec<f64> {
        vec![u[0].exp()]
    }
}

/// `ς = (σ_1, ..., σ_p2, σε)`: independent random effects with homoscedastic errors.
#[derive(Debug, Clone, Copy)]
pub struct IndependentStdDev {
    pub random_effects: usize,
}

impl VarianceParametrization for IndependentStdDev {
    fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = (1..=self.random_effects).map(|i| format!("sigma{i}")).collect();
        v.push("sigma_eps".into());
        v
    }

    fn components(&self, p: &[f64]) -> Result<VarianceComponents> {
        let q = self.random_effects;
        if p.len() != q + 1 {
            return Err(Error::InvalidInput(format!("expected {} variance parameters", q + 1)));
        }
        let g = DMatrix::from_fn(q, q, |i, j| if i == j { p[i] * p[i] } else { 0.0 });
        VarianceComponents::new(g, ErrorCovariance::Homoscedastic { variance: p[q] * p[q] })
    }

    fn derivative(&self, p: &[f64], a: usize, k: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let q = self.random_effects;
        if a < q {
            let g = DMatrix::from_fn(q, q, |i, j| if i == a && j == a { 2.0 * p[a] } else { 0.0 });
            Some((g, DMatrix::zeros(k, k)))
        } else if a == q {
            Some((DMatrix::zeros(q, q), DMatrix::identity(k, k) * (2.0 * p[q])))
        } else {
            None
        }
    }

    fn to_unconstrained(&self, p: &[f64]) -> Vec<f64> {
        p.iter().map(|v| v.max(1e-300).ln()).collect()
    }

    fn from_unconstrained(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|v| v.exp()).collect()
    }
}

/// Variance components held fixed; `ς` is empty.
#[derive(Debug, Clone)]
pub struct FixedComponents(pub VarianceComponents);

impl VarianceParametrization for FixedComponents {
    fn names(&self) -> Vec<String> {
        Vec::new()
    }

    fn components(&self, p: &[f64]) -> Result<VarianceComponents> {
        if !p.is_empty() {
            return Err(Error::InvalidInput("fixed variance components take no parameters".into()));
        }
        Ok(self.0.clone())
    }

    fn to_unconstrained(&self, _p: &[f64]) -> Vec<f64> {
        Vec::new()
    }

    fn from_unconstrained(&self, _u: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}
