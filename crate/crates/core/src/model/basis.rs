use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Axis-aligned box of admissible covariate values.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    bounds: Vec<(f64, f64)>,
}

impl Region {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidInput("region needs at least one axis".into()));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidInput(format!("bad region axis [{lo}, {hi}]")));
            }
        }
        Ok(Self { bounds })
    }

    /// `[0, 1]^dim`.
    pub fn unit(dim: usize) -> Self {
        Self {
            bounds: vec![(0.0, 1.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        const SLACK: f64 = 1e-12;
        x.len() == self.bounds.len()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(v, &(lo, hi))| *v >= lo - SLACK && *v <= hi + SLACK)
    }

    /// Regular grid with `per_axis` points on each axis, in lexicographic order.
    pub fn grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(2);
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| {
                (0..per_axis)
                    .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
                    .collect()
            })
            .collect();
        cartesian(&axes)
    }
}

pub(crate) fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

type FeatureFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Family of regression functions.
#[derive(Clone)]
pub enum BasisKind {
    /// `(1, x)` in a single covariate.
    Linear,
    /// `(1, x_1, ..., x_d)`.
    Additive { vars: usize },
    /// `(1, x, ..., x^degree)` in a single covariate.
    Polynomial { degree: usize },
    /// User-supplied functions.
    Custom {
        name: String,
        input_dim: usize,
        dim: usize,
        has_intercept: bool,
        f: FeatureFn,
    },
}

impl fmt::Debug for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisKind::Linear => write!(f, "Linear"),
            BasisKind::Additive { vars } => write!(f, "Additive({vars})"),
            BasisKind::Polynomial { degree } => write!(f, "Polynomial({degree})"),
            BasisKind::Custom { name, dim, .. } => write!(f, "Custom({name}, dim={dim})"),
        }
    }
}

/// Ordered regression functions of one covariate vector, with their admissible region.
#[derive(Debug, Clone)]
pub struct Basis {
    kind: BasisKind,
    region: Region,
}

impl Basis {
    /// `(1, x)` on `[0, 1]`.
    pub fn linear() -> Self {
        Self {
            kind: BasisKind::Linear,
            region: Region::unit(1),
        }
    }

    /// `(1, x_1, ..., x_vars)` on `[0, 1]^vars`.
    pub fn additive(vars: usize) -> Result<Self> {
        if vars == 0 {
            return Err(Error::InvalidInput("additive basis needs >= 1 variable".into()));
        }
        Ok(Self {
            kind: BasisKind::Additive { vars },
            region: Region::unit(vars),
        })
    }

    /// `(1, x, ..., x^degree)` on `[0, 1]`.
    pub fn polynomial(degree: usize) -> Self {
        Self {
            kind: BasisKind::Polynomial { degree },
            region: Region::unit(1),
        }
    }

    pub fn custom<F>(
        name: impl Into<String>,
        input_dim: usize,
        dim: usize,
        has_intercept: bool,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if dim == 0 || input_dim == 0 {
            return Err(Error::InvalidInput("custom basis needs positive dimensions".into()));
        }
        Ok(Self {
            kind: BasisKind::Custom {
                name: name.into(),
                input_dim,
                dim,
                has_intercept,
                f: Arc::new(f),
            },
            region: Region::unit(input_dim),
        })
    }

    pub fn with_region(mut self, region: Region) -> Result<Self> {
        if region.dim() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "region has {} axes, basis takes {} covariates",
                region.dim(),
                self.input_dim()
            )));
        }
        self.region = region;
        Ok(self)
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn dimension(&self) -> usize {
        match &self.kind {
            BasisKind::Linear => 2,
            BasisKind::Additive { vars } => vars + 1,
            BasisKind::Polynomial { degree } => degree + 1,
            BasisKind::Custom { dim, .. } => *dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.kind {
            BasisKind::Linear | BasisKind::Polynomial { .. } => 1,
            BasisKind::Additive { vars } => *vars,
            BasisKind::Custom { input_dim, .. } => *input_dim,
        }
    }

    pub fn has_intercept(&self) -> bool {
        match &self.kind {
            BasisKind::Custom { has_intercept, .. } => *has_intercept,
            _ => true,
        }
    }

    /// Evaluates the functions anywhere, including outside the region (extrapolation).
    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.input_dim());
        match &self.kind {
            BasisKind::Linear => DVector::from_vec(vec![1.0, x[0]]),
            BasisKind::Additive { .. } => {
                let mut v = Vec::with_capacity(x.len() + 1);
                v.push(1.0);
                v.extend_from_slice(x);
                DVector::from_vec(v)
            }
            BasisKind::Polynomial { degree } => {
                DVector::from_iterator(degree + 1, (0..=*degree).map(|d| x[0].powi(d as i32)))
            }
            BasisKind::Custom { f, dim, .. } => {
                let v = f(x);
                assert_eq!(v.len(), *dim, "custom basis returned wrong length");
                DVector::from_vec(v)
            }
        }
    }

    /// Evaluates the functions, rejecting points outside the region.
    pub fn eval_in_region(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Domain(format!(
                "expected {} covariates, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        if !self.region.contains(x) {
            return Err(Error::Domain(format!("point {x:?} outside region {:?}", self.region.bounds())));
        }
        let v = self.eval(x);
        if v.iter().any(|f| !f.is_finite()) {
            return Err(Error::Domain(format!("non-finite regression value at {x:?}")));
        }
        Ok(v)
    }

    /// Derivative of the functions of a scalar covariate.
    pub fn derivative(&self, t: f64) -> DVector<f64> {
        match &self.kind {
            BasisKind::Linear => DVector::from_vec(vec![0.0, 1.0]),
            BasisKind::Polynomial { degree } => DVector::from_iterator(
                degree + 1,
                (0..=*degree).map(|d| if d == 0 { 0.0 } else { d as f64 * t.powi(d as i32 - 1) }),
            ),
            _ => {
                let h = 1e-6 * t.abs().max(1.0);
                (self.eval(&[t + h]) - self.eval(&[t - h])) / (2.0 * h)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_basis_rejects_points_outside_region() {
        let b = Basis::linear();
        assert!(b.eval_in_region(&[0.5]).is_ok());
        assert!(matches!(b.eval_in_region(&[1.5]), Err(Error::Domain(_))));
        assert!(matches!(b.eval_in_region(&[0.5, 0.5]), Err(Error::Domain(_))));
        assert_eq!(b.eval(&[-0.056]).as_slice(), &[1.0, -0.056]);
    }

    #[test]
    fn polynomial_derivative_matches_difference_quotient() {
        let b = Basis::polynomial(3);
        let t = 0.7;
        let h = 1e-6;
        let fd = (b.eval(&[t + h]) - b.eval(&[t - h])) / (2.0 * h);
        assert!((b.derivative(t) - fd).amax() < 1e-8);
    }

    #[test]
    fn grid_is_lexicographic() {
        let g = Region::unit(2).grid(2);
        assert_eq!(g, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
    }
}
