//! Mixed-effects degradation model: regression bases, variance structure, scenarios,
//! likelihood, estimators and Fisher information blocks.

mod basis;
mod info;
mod variance;

use std::sync::Arc;

use nalgebra::DVector;

pub use basis::{Basis, BasisKind, Region};
pub use info::{
    build_stress_matrix, build_time_matrix, gls_estimate, info_beta, info_beta_inverse, info_varsigma,
    inverse_marginal_info, log_likelihood, marginal_info, ols_estimate, response_covariance, stack_rows,
    DerivativeRoute, VarsigmaInfo,
};
pub(crate) use info::fd_step;
pub use variance::{
    ErrorCovariance, ErrorVarianceOnly, FixedComponents, IndependentStdDev, InterceptSlopeStdDev,
    VarianceComponents, VarianceParametrization,
};

use crate::error::{Error, Result};
use crate::linalg::kron_vec;

/// A vector of regression functions over some covariate space.
pub trait Regression {
    fn dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn features(&self, x: &[f64]) -> DVector<f64>;
}

impl Regression for Basis {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn input_dim(&self) -> usize {
        Basis::input_dim(self)
    }

    fn features(&self, x: &[f64]) -> DVector<f64> {
        self.eval(x)
    }
}

/// Kronecker composition `f(x, y) = f_a(x) ⊗ f_b(y)` of two regressions; the covariate vector
/// is the concatenation of both inputs.
#[derive(Debug, Clone, Copy)]
pub struct KroneckerRegression<'a, A: ?Sized, B: ?Sized> {
    pub first: &'a A,
    pub second: &'a B,
}

impl<A: Regression + ?Sized, B: Regression + ?Sized> Regression for KroneckerRegression<'_, A, B> {
    fn dim(&self) -> usize {
        self.first.dim() * self.second.dim()
    }

    fn input_dim(&self) -> usize {
        self.first.input_dim() + self.second.input_dim()
    }

    fn features(&self, x: &[f64]) -> DVector<f64> {
        let (a, b) = x.split_at(self.first.input_dim());
        kron_vec(&self.first.features(a), &self.second.features(b))
    }
}

/// Stress regression `f1(x) = f11(x_1) ⊗ ... ⊗ f1m(x_m)` over groups of stress factors.
#[derive(Debug, Clone)]
pub struct StressBasis {
    factors: Vec<Basis>,
}

impl StressBasis {
    pub fn new(factors: Vec<Basis>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidInput("at least one stress factor basis is required".into()));
        }
        if let Some(b) = factors.iter().find(|b| !b.has_intercept()) {
            return Err(Error::InvalidInput(format!(
                "stress basis {:?} must start with the constant function",
                b.kind()
            )));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[Basis] {
        &self.factors
    }

    /// Product of the factor regions.
    pub fn region(&self) -> Region {
        let bounds = self
            .factors
            .iter()
            .flat_map(|b| b.region().bounds().iter().copied())
            .collect();
        Region::new(bounds).expect("factor regions are valid")
    }

    /// Splits a stress vector into the covariates of each factor.
    pub fn split<'x>(&self, x: &'x [f64]) -> Vec<&'x [f64]> {
        let mut out = Vec::with_capacity(self.factors.len());
        let mut rest = x;
        for b in &self.factors {
            let (head, tail) = rest.split_at(b.input_dim());
            out.push(head);
            rest = tail;
        }
        out
    }
}

impl Regression for StressBasis {
    fn dim(&self) -> usize {
        self.factors.iter().map(|b| b.dimension()).product()
    }

    fn input_dim(&self) -> usize {
        self.factors.iter().map(|b| b.input_dim()).sum()
    }

    fn features(&self, x: &[f64]) -> DVector<f64> {
        debug_assert_eq!(x.len(), Regression::input_dim(self));
        let parts = self.split(x);
        let mut acc = DVector::from_element(1, 1.0);
        for (b, xs) in self.factors.iter().zip(parts) {
            acc = kron_vec(&acc, &b.eval(xs));
        }
        acc
    }
}

/// Product-type model `f(x, t) = f1(x) ⊗ f2(t)` with random effects on the constant-stress block.
#[derive(Debug, Clone)]
pub struct ProductModel {
    stress: StressBasis,
    time: Basis,
}

impl ProductModel {
    pub fn new(stress_bases: Vec<Basis>, time_basis: Basis) -> Result<Self> {
        if time_basis.input_dim() != 1 {
            return Err(Error::InvalidInput("time basis must take a scalar time".into()));
        }
        Ok(Self {
            stress: StressBasis::new(stress_bases)?,
            time: time_basis,
        })
    }

    pub fn stress(&self) -> &StressBasis {
        &self.stress
    }

    pub fn time_basis(&self) -> &Basis {
        &self.time
    }

    pub fn p1(&self) -> usize {
        self.stress.dim()
    }

    pub fn p2(&self) -> usize {
        self.time.dimension()
    }

    pub fn p(&self) -> usize {
        self.p1() * self.p2()
    }

    pub fn random_effect_dim(&self) -> usize {
        self.p2()
    }

    pub fn stress_input_dim(&self) -> usize {
        Regression::input_dim(&self.stress)
    }

    pub fn f1(&self, x: &[f64]) -> DVector<f64> {
        self.stress.features(x)
    }

    pub fn f2(&self, t: f64) -> DVector<f64> {
        self.time.eval(&[t])
    }

    pub fn f(&self, x: &[f64], t: f64) -> DVector<f64> {
        kron_vec(&self.f1(x), &self.f2(t))
    }
}

/// Nominal parameters `θ = (β, ς)` plus the use condition, failure threshold and quantile level.
#[derive(Debug, Clone)]
pub struct Scenario {
    model: ProductModel,
    beta: DVector<f64>,
    parametrization: Arc<dyn VarianceParametrization>,
    variance_params: Vec<f64>,
    varcomps: VarianceComponents,
    use_condition: Vec<f64>,
    threshold: f64,
    alpha: f64,
}

impl Scenario {
    pub fn new(
        model: ProductModel,
        beta: Vec<f64>,
        parametrization: Arc<dyn VarianceParametrization>,
        variance_params: Vec<f64>,
        use_condition: Vec<f64>,
        threshold: f64,
        alpha: f64,
    ) -> Result<Self> {
        if beta.len() != model.p() {
            return Err(Error::InvalidInput(format!(
                "beta has {} entries, model needs p1*p2 = {}",
                beta.len(),
                model.p()
            )));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("beta must be finite".into()));
        }
        if use_condition.len() != model.stress_input_dim() {
            return Err(Error::InvalidInput(format!(
                "use condition has {} coordinates, stress model takes {}",
                use_condition.len(),
                model.stress_input_dim()
            )));
        }
        if !threshold.is_finite() {
            return Err(Error::InvalidInput("threshold must be finite".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha {alpha} must lie in (0, 1)")));
        }
        let varcomps = parametrization.components(&variance_params)?;
        if varcomps.random_effect_dim() != model.p2() {
            return Err(Error::InvalidInput(format!(
                "Σγ is {0}x{0}, time basis has dimension {1}",
                varcomps.random_effect_dim(),
                model.p2()
            )));
        }
        Ok(Self {
            model,
            beta: DVector::from_vec(beta),
            parametrization,
            variance_params,
            varcomps,
            use_condition,
            threshold,
            alpha,
        })
    }

    pub fn model(&self) -> &ProductModel {
        &self.model
    }

    pub fn beta(&self) -> &DVector<f64> {
        &self.beta
    }

    pub fn parametrization(&self) -> &dyn VarianceParametrization {
        self.parametrization.as_ref()
    }

    pub fn variance_params(&self) -> &[f64] {
        &self.variance_params
    }

    pub fn varcomps(&self) -> &VarianceComponents {
        &self.varcomps
    }

    pub fn use_condition(&self) -> &[f64] {
        &self.use_condition
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        self.rebuild(self.beta.as_slice().to_vec(), self.variance_params.clone(), alpha)
    }

    pub fn with_beta(&self, beta: Vec<f64>) -> Result<Self> {
        self.rebuild(beta, self.variance_params.clone(), self.alpha)
    }

    pub fn with_variance_params(&self, params: Vec<f64>) -> Result<Self> {
        self.rebuild(self.beta.as_slice().to_vec(), params, self.alpha)
    }

    fn rebuild(&self, beta: Vec<f64>, params: Vec<f64>, alpha: f64) -> Result<Self> {
        Scenario::new(
            self.model.clone(),
            beta,
            self.parametrization.clone(),
            params,
            self.use_condition.clone(),
            self.threshold,
            alpha,
        )
    }

    /// `f1(x_u)`, the extrapolation direction in the stress marginal model.
    pub fn c_stress(&self) -> DVector<f64> {
        self.model.f1(&self.use_condition)
    }
}
