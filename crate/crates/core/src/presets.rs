//! Nominal scenarios for the three worked examples: one stress variable, two interacting
//! stress variables, and two additive stress variables.

use std::sync::Arc;

use crate::model::{Basis, InterceptSlopeStdDev, ProductModel, Scenario};

/// One stress variable, straight-line paths; scar-width growth nominals.
pub fn single_stress() -> Scenario {
    let model = ProductModel::new(vec![Basis::linear()], Basis::linear()).expect("valid model");
    Scenario::new(
        model,
        vec![2.397, 1.018, 1.629, 0.0696],
        Arc::new(InterceptSlopeStdDev),
        vec![0.114, 0.105, -0.143, 0.048],
        vec![-0.056],
        3.912,
        0.5,
    )
    .expect("valid scenario")
}

/// Two interacting stress variables, `f1(x) = (1, x2, x1, x1 x2)`.
pub fn two_stress_interaction() -> Scenario {
    let model = ProductModel::new(vec![Basis::linear(), Basis::linear()], Basis::linear()).expect("valid model");
    Scenario::new(
        model,
        vec![4.0, 0.5, 0.75, 0.25, 1.5, 0.25, 1.8, 4.03],
        Arc::new(InterceptSlopeStdDev),
        vec![0.7, 0.7, 0.0, 0.85],
        vec![-0.5, -0.4],
        14.39,
        0.5,
    )
    .expect("valid scenario")
}

/// Two additive stress variables, `f1(x) = (1, x1, x2)`; the location parameters are
/// illustrative since the stress design does not depend on them.
pub fn two_stress_additive() -> Scenario {
    let model = ProductModel::new(vec![Basis::additive(2).expect("two variables")], Basis::linear())
        .expect("valid model");
    Scenario::new(
        model,
        vec![4.0, 0.5, 1.5, 0.25, 0.75, 0.25],
        Arc::new(InterceptSlopeStdDev),
        vec![0.7, 0.7, 0.0, 0.85],
        vec![-0.5, -0.4],
        14.39,
        0.5,
    )
    .expect("valid scenario")
}

/// `k` equispaced times on `[0, 1]`.
pub fn equispaced_times(k: usize) -> Vec<f64> {
    match k {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..k).map(|j| j as f64 / (k - 1) as f64).collect(),
    }
}
