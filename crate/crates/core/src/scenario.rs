//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "single stress",
//!   "model": { "stress_factors": { "kind": "linear", "count": 1 }, "time_basis": { "kind": "linear" } },
//!   "beta": [2.397, 1.018, 1.629, 0.0696],
//!   "variance": { "sigma1": 0.114, "sigma2": 0.105, "rho": -0.143, "sigma_eps": 0.048 },
//!   "use_condition": [-0.056],
//!   "threshold": 3.912,
//!   "alpha": 0.5,
//!   "measurement_times": { "k": 11 },
//!   "time_plan": { "delta_t": 0.05, "k": 6 }
//! }
//! ```
//!
//! `beta` is in lexicographic order with the stress index outermost. `variance` is either the
//! standard deviations and correlation of a random intercept and slope, or explicit matrices
//! (`sigma_gamma` and `sigma_eps`), which are then treated as known. `regions` (optional)
//! gives `stress` bounds per covariate and `time` bounds; both default to `[0, 1]`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Basis, ErrorCovariance, FixedComponents, InterceptSlopeStdDev, ProductModel, Region, Scenario,
    VarianceComponents, VarianceParametrization,
};
use crate::presets::equispaced_times;
use crate::time_plan::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelSpec,
    pub beta: Vec<f64>,
    pub variance: VarianceSpec,
    pub use_condition: Vec<f64>,
    pub threshold: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Regions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_times: Option<MeasurementTimes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_plan: Option<TimePlanSpec>,
}

fn default_alpha() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub stress_factors: StressSpec,
    pub time_basis: TimeBasisSpec,
}

/// `linear`: one straight line per stress variable, combined by Kronecker product (all
/// interactions). `additive`: `(1, x1, ..., x_count)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StressSpec {
    Linear { count: usize },
    Additive { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeBasisSpec {
    Linear,
    Polynomial { degree: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VarianceSpec {
    StdDev(StdDevSpec),
    Matrices(MatrixSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StdDevSpec {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub sigma_eps: f64,
}

/// `sigma_eps` is the error variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub sigma_gamma: Vec<Vec<f64>>,
    pub sigma_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stress: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasurementTimes {
    Count { k: usize },
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimePlanSpec {
    pub delta_t: f64,
    pub k: usize,
}

/// Measurement times when the file gives none.
pub const DEFAULT_MEASUREMENTS: usize = 11;

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    fn stress_bases(&self) -> Result<Vec<Basis>> {
        let bounds = self.regions.as_ref().and_then(|r| r.stress.clone());
        let (bases, dims): (Vec<Basis>, Vec<usize>) = match self.model.stress_factors {
            StressSpec::Linear { count } => ((0..count).map(|_| Basis::linear()).collect(), vec![1; count]),
            StressSpec::Additive { count } => (vec![Basis::additive(count)?], vec![count]),
        };
        if bases.is_empty() {
            return Err(Error::InvalidInput("at least one stress variable is required".into()));
        }
        let Some(bounds) = bounds else { return Ok(bases) };
        let total: usize = dims.iter().sum();
        if bounds.len() != total {
            return Err(Error::InvalidInput(format!(
                "regions.stress has {} intervals for {total} stress variables",
                bounds.len()
            )));
        }
        let mut rest = bounds.as_slice();
        bases
            .into_iter()
            .zip(dims)
            .map(|(b, d)| {
                let (head, tail) = rest.split_at(d);
                rest = tail;
                b.with_region(Region::new(head.to_vec())?)
            })
            .collect()
    }

    fn time_basis(&self) -> Result<Basis> {
        let b = match self.model.time_basis {
            TimeBasisSpec::Linear => Basis::linear(),
            TimeBasisSpec::Polynomial { degree } => Basis::polynomial(degree),
        };
        match self.regions.as_ref().and_then(|r| r.time) {
            Some(t) => b.with_region(Region::new(vec![t])?),
            None => Ok(b),
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let model = ProductModel::new(self.stress_bases()?, self.time_basis()?)?;
        let (par, params): (Arc<dyn VarianceParametrization>, Vec<f64>) = match &self.variance {
            VarianceSpec::StdDev(v) => {
                if model.p2() != 2 {
                    return Err(Error::InvalidInput(
                        "(sigma1, sigma2, rho, sigma_eps) needs a straight-line time basis; give matrices instead".into(),
                    ));
                }
                (Arc::new(InterceptSlopeStdDev), vec![v.sigma1, v.sigma2, v.rho, v.sigma_eps])
            }
            VarianceSpec::Matrices(m) => {
                let q = m.sigma_gamma.len();
                if m.sigma_gamma.iter().any(|r| r.len() != q) {
                    return Err(Error::InvalidInput("sigma_gamma must be square".into()));
                }
                let g = DMatrix::from_fn(q, q, |i, j| m.sigma_gamma[i][j]);
                let vc = VarianceComponents::new(g, ErrorCovariance::Homoscedastic { variance: m.sigma_eps })?;
                (Arc::new(FixedComponents(vc)), Vec::new())
            }
        };
        Scenario::new(
            model,
            self.beta.clone(),
            par,
            params,
            self.use_condition.clone(),
            self.threshold,
            self.alpha,
        )
    }

    /// Times at which every unit is measured.
    pub fn measurement_times(&self) -> Result<Vec<f64>> {
        let (lo, hi) = self.regions.as_ref().and_then(|r| r.time).unwrap_or((0.0, 1.0));
        let unit = match &self.measurement_times {
            None => equispaced_times(DEFAULT_MEASUREMENTS),
            Some(MeasurementTimes::Count { k }) if *k > 0 => equispaced_times(*k),
            Some(MeasurementTimes::Count { .. }) => {
                return Err(Error::InvalidInput("measurement_times.k must be positive".into()))
            }
            Some(MeasurementTimes::Explicit(t)) => return Ok(t.clone()),
        };
        Ok(unit.into_iter().map(|t| lo + (hi - lo) * t).collect())
    }

    pub fn time_grid(&self) -> Result<Option<TimeGrid>> {
        self.time_plan.map(|p| TimeGrid::new(p.delta_t, p.k)).transpose()
    }
}

/// Parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<(ScenarioFile, Scenario)> {
    let file = ScenarioFile::load(path)?;
    let s = file.scenario()?;
    Ok((file, s))
}
