use adt_design::design::ApproximateDesign;
use adt_design::estimation::{fit_ml, simulate_replicate, validate_avar, ExactDesign, FitOptions, SimulationSpec};
use adt_design::model::{build_stress_matrix, build_time_matrix, response_covariance, Scenario};
use adt_design::presets::{equispaced_times, single_stress};
use adt_design::stress::extrapolation_design;
use nalgebra::DMatrix;
use rayon::prelude::*;

fn spec(s: Scenario, xi: &ApproximateDesign, n: usize, reps: usize, seed: u64) -> SimulationSpec {
    let design = ExactDesign::from_approximate(xi, n, equispaced_times(11)).unwrap();
    SimulationSpec::new(s, design, reps, seed).unwrap()
}

fn mean_paths(spec: &SimulationSpec) -> DMatrix<f64> {
    let s = &spec.scenario;
    let f1 = build_stress_matrix(&spec.design.settings, s.model()).unwrap();
    let f2 = build_time_matrix(&spec.design.times, s.model().time_basis()).unwrap();
    let (p1, p2) = (s.model().p1(), s.model().p2());
    let b = DMatrix::from_fn(p1, p2, |i, j| s.beta()[i * p2 + j]);
    f1 * b * f2.transpose()
}

fn sample_var(x: &[f64]) -> (f64, f64) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64)
}

#[test]
fn vanishing_variances_reproduce_the_mean_paths() {
    let s = single_stress().with_variance_params(vec![1e-10, 1e-10, 0.0, 1e-10]).unwrap();
    let xi = extrapolation_design(&s, 101).unwrap();
    let sp = spec(s, &xi, 40, 1, 11);
    let y = simulate_replicate(&sp, 0).unwrap();
    assert!((y - mean_paths(&sp)).amax() < 1e-8);
}

#[test]
fn response_variance_matches_v() {
    let s = single_stress();
    let xi = ApproximateDesign::one_point(vec![0.5]);
    let sp = spec(s.clone(), &xi, 10_000, 1, 2024);
    let resid = simulate_replicate(&sp, 0).unwrap() - mean_paths(&sp);
    let f2 = build_time_matrix(&sp.design.times, s.model().time_basis()).unwrap();
    let v = response_covariance(&f2, s.varcomps()).unwrap();
    let n = resid.nrows() as f64;
    for j in 0..resid.ncols() {
        let col: Vec<f64> = resid.column(j).iter().copied().collect();
        let (_, var) = sample_var(&col);
        let se = v[(j, j)] * (2.0 / (n - 1.0)).sqrt();
        assert!((var - v[(j, j)]).abs() < 3.0 * se, "time {j}: {var} vs {}", v[(j, j)]);
    }
}

#[test]
fn beta_estimates_are_centred_on_the_truth() {
    let s = single_stress();
    let xi = extrapolation_design(&s, 101).unwrap();
    let reps = 100;
    let sp = spec(s.clone(), &xi, 1000, reps, 77);
    let f1 = build_stress_matrix(&sp.design.settings, s.model()).unwrap();
    let f2 = build_time_matrix(&sp.design.times, s.model().time_basis()).unwrap();
    let fits: Vec<_> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let y = simulate_replicate(&sp, r).unwrap();
            fit_ml(&y, &f1, &f2, s.parametrization(), s.variance_params(), FitOptions::default()).unwrap()
        })
        .collect();
    for fit in &fits {
        let p = &fit.variance_params;
        assert!(p[0] >= 0.0 && p[1] >= 0.0 && p[2].abs() <= 1.0 && p[3] > 0.0, "{p:?}");
    }
    for i in 0..s.model().p() {
        let draws: Vec<f64> = fits.iter().map(|f| f.beta[i]).collect();
        let (mean, var) = sample_var(&draws);
        let se = (var / reps as f64).sqrt();
        assert!((mean - s.beta()[i]).abs() < 3.0 * se, "beta[{i}]: {mean} vs {} (se {se})", s.beta()[i]);
    }
}

#[test]
fn doubling_units_halves_the_variance() {
    let s = single_stress();
    let xi = extrapolation_design(&s, 101).unwrap();
    let reps = 400;
    let small = validate_avar(&spec(s.clone(), &xi, 100, reps, 5), 0.5).unwrap();
    let large = validate_avar(&spec(s.clone(), &xi, 200, reps, 6), 0.5).unwrap();
    let q = small.empirical_variance / large.empirical_variance;
    // each sample variance has relative standard error about sqrt(2 / (R - 1))
    let se = 2.0 * (4.0 / (reps as f64 - 1.0)).sqrt();
    assert!((q - 2.0).abs() < 3.0 * se, "variance ratio {q}");
}

#[test]
fn optimal_stress_design_beats_the_two_point_uniform_design() {
    let s = single_stress();
    let xi = extrapolation_design(&s, 101).unwrap();
    let bar = ApproximateDesign::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
    let opt = validate_avar(&spec(s.clone(), &xi, 200, 400, 9), 0.5).unwrap();
    let uni = validate_avar(&spec(s, &bar, 200, 400, 9), 0.5).unwrap();
    assert!(opt.empirical_variance < uni.empirical_variance);
    assert_eq!(opt.degenerate, 0);
    assert!((0.8..1.25).contains(&opt.ratio), "{}", opt.ratio);
}
