//! The three worked examples, operation by operation.

use adt_design::design::{
    c_criterion, certificate_gap, efficiency, product_design, round_to_exact, uniform_grid_efficiency,
    ApproximateDesign, GridSize,
};
use adt_design::destructive::{
    destructive_optimal_design, pi_star, sigma_ratio,
};
use adt_design::failure::{avar_quantile, avar_quantile_dense, gradient_varsigma, use_profile};
use adt_design::linalg::{kron, max_rel_dev};
use adt_design::model::{
    build_stress_matrix, build_time_matrix, info_beta, info_varsigma, inverse_marginal_info, log_likelihood,
    marginal_info, response_covariance, DerivativeRoute, Regression,
};
use adt_design::presets::{equispaced_times, single_stress, two_stress_additive, two_stress_interaction};
use adt_design::stress::{
    additive_family, elfving_solve, extrapolation_two_point, optimal_stress_for_quantile, verify_c_optimality,
};
use adt_design::time_plan::{optimal_time_plan, time_plan_efficiency, TimeGrid, TimePlanOptions};
use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};

fn close(x: f64, target: f64, tol: f64) {
    assert!((x - target).abs() <= tol, "{x} is not within {tol} of {target}");
}

fn vertices() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
}

#[test]
fn use_condition_profiles() {
    let p1 = use_profile(&single_stress());
    close(p1.delta()[0], 2.306, 5e-4);
    close(p1.delta()[1], 1.014, 5e-4);
    // nominals are rounded in print, hence the relative tolerance
    assert_relative_eq!(p1.h(0.0).unwrap(), -14.03, max_relative = 0.01);
    assert_relative_eq!(p1.h_limit(), 9.67, max_relative = 0.01);
    close(p1.quantile(0.5).unwrap().finite().unwrap(), 1.583, 1e-3);
    close(p1.cdf(p1.quantile(0.5).unwrap().finite().unwrap()).unwrap(), 0.5, 1e-12);

    let p2 = use_profile(&two_stress_interaction());
    close(p2.delta()[0], 3.31, 5e-3);
    close(p2.delta()[1], 1.08, 5e-3);
    assert_relative_eq!(p2.h(0.0).unwrap(), -15.83, max_relative = 0.01);
    close(p2.h_limit(), 1.54, 5e-3);
    close(p2.alpha_max(), 0.939, 5e-4);
    close(p2.quantile(0.5).unwrap().finite().unwrap(), 10.25, 5e-3);

    let s = single_stress();
    let at_zero = adt_design::model::Scenario::new(
        s.model().clone(),
        s.beta().as_slice().to_vec(),
        std::sync::Arc::new(adt_design::model::InterceptSlopeStdDev),
        s.variance_params().to_vec(),
        vec![0.0],
        s.threshold(),
        0.5,
    )
    .unwrap();
    let d = use_profile(&at_zero).delta().clone();
    assert_eq!((d[0], d[1]), (s.beta()[0], s.beta()[1]));
}

#[test]
fn asymptotic_variance_structure() {
    let s = single_stress();
    let xi = extrapolation_two_point(-0.056).unwrap();
    let times = equispaced_times(11);
    let med = avar_quantile(&s, &xi, &times).unwrap();
    assert_eq!(med.varsigma_term, 0.0);
    for alpha in [0.1, 0.5, 0.8] {
        let sa = s.with_alpha(alpha).unwrap();
        let fast = avar_quantile(&sa, &xi, &times).unwrap();
        let dense = avar_quantile_dense(&sa, &xi, &times).unwrap();
        assert_relative_eq!(fast.total, dense.total, max_relative = 1e-9);
    }
    assert_relative_eq!(med.for_units(50), 2.0 * med.for_units(100), max_relative = 1e-15);

    let prof = use_profile(&s);
    let t = prof.quantile(0.5).unwrap().finite().unwrap();
    let g = gradient_varsigma(&prof, 0.5, t, s.parametrization(), s.variance_params()).unwrap();
    assert!(g.iter().all(|v| *v == 0.0));
}

#[test]
fn marginal_information_two_routes_on_example_one() {
    let s = single_stress();
    let f2 = build_time_matrix(&equispaced_times(11), s.model().time_basis()).unwrap();
    let v = response_covariance(&f2, s.varcomps()).unwrap();
    let direct = marginal_info(&f2, &v).unwrap().try_inverse().unwrap();
    let lemma = inverse_marginal_info(&f2, s.varcomps()).unwrap();
    assert!(max_rel_dev(&direct, &lemma) < 1e-12);

    let one = info_varsigma(&f2, s.parametrization(), s.variance_params(), 1, DerivativeRoute::Analytic).unwrap();
    let two = info_varsigma(&f2, s.parametrization(), s.variance_params(), 2, DerivativeRoute::Analytic).unwrap();
    assert!(max_rel_dev(&(one.matrix * 2.0), &two.matrix) < 1e-15);
}

#[test]
fn likelihood_matches_dense_normal_density() {
    let s = two_stress_interaction();
    let settings = vec![vec![0.0, 0.0], vec![0.3, 1.0], vec![1.0, 0.2]];
    let times = [0.0, 0.4, 1.0];
    let f1 = build_stress_matrix(&settings, s.model()).unwrap();
    let f2 = build_time_matrix(&times, s.model().time_basis()).unwrap();
    let v = response_covariance(&f2, s.varcomps()).unwrap();
    let y = DMatrix::from_row_slice(3, 3, &[3.1, 4.0, 5.2, 2.9, 4.4, 7.0, 3.5, 5.1, 6.3]);
    let ll = log_likelihood(s.beta(), &f1, &f2, &v, &y).unwrap();

    // stacked unit-major vector with covariance I ⊗ V
    let x = kron(&f1, &f2);
    let mean = &x * s.beta();
    let obs = DVector::from_iterator(9, (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| y[(i, j)]));
    let cov = kron(&DMatrix::identity(3, 3), &v);
    let r = obs - mean;
    let chol = cov.clone().cholesky().unwrap();
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let q = r.dot(&chol.solve(&r));
    let oracle = -0.5 * (9.0 * (2.0 * std::f64::consts::PI).ln() + logdet + q);
    assert_relative_eq!(ll, oracle, max_relative = 1e-12);

    // M_β against the same stacked form
    let dense = x.transpose() * cov.try_inverse().unwrap() * &x;
    assert!(max_rel_dev(&dense, &info_beta(&f1, &f2, &v).unwrap()) < 1e-10);
}

#[test]
fn stress_criteria_and_efficiencies() {
    let s1 = single_stress();
    let xi = extrapolation_two_point(-0.056).unwrap();
    close(c_criterion(&xi, s1.model().stress(), &s1.c_stress()).value, 1.2366, 5e-4);
    close(uniform_grid_efficiency(GridSize::Points(2), 0.0), 0.50, 5e-3);
    close(uniform_grid_efficiency(GridSize::Points(5), -1.0), 0.47, 5e-3);
    close(uniform_grid_efficiency(GridSize::Continuous, -1e6), 1.0 / 3.0, 1e-5);

    let s2 = two_stress_interaction();
    let reg = s2.model().stress();
    let opt = optimal_stress_for_quantile(&s2, 101, &equispaced_times(6)).unwrap().design;
    let bar = ApproximateDesign::uniform(vertices()).unwrap();
    close(efficiency(&bar, &opt, reg, &s2.c_stress()).unwrap().value, 0.61, 5e-3);
    let counts = round_to_exact(&opt, 100).unwrap();
    let idx = |x: &[f64]| opt.support().iter().position(|p| p == x).unwrap();
    assert_eq!(vertices().iter().map(|v| counts[idx(v)]).collect::<Vec<_>>(), vec![58, 17, 19, 6]);
    let marginal = product_design(&extrapolation_two_point(-0.5).unwrap(), &extrapolation_two_point(-0.4).unwrap());
    for (x, w) in marginal.iter() {
        close(opt.weight_at(x), w, 1e-9);
    }

    let s3 = two_stress_additive();
    let reg3 = s3.model().stress();
    let c3 = s3.c_stress();
    close(c_criterion(&bar, reg3, &c3).value, 8.24, 5e-3);
    let sol = elfving_solve(reg3, &reg3.region().grid(11), &c3).unwrap();
    close(sol.criterion, 4.00, 5e-3);
    for (a, weights) in [(0.0, [0.70, 0.05, 0.25]), (1.0, [0.75, 0.05, 0.20])] {
        let d = additive_family(-0.5, -0.4, a).unwrap();
        close(c_criterion(&d, reg3, &c3).value, sol.criterion, 1e-9);
        let middle = if a == 0.0 { vec![0.0, 1.0] } else { vec![1.0, 0.0] };
        let support = [vec![0.0, 0.0], middle, vec![1.0, 1.0]];
        for (x, w) in support.iter().zip(weights) {
            close(d.weight_at(x), w, 5e-3);
        }
    }
}

#[test]
fn certificates_on_the_line() {
    let s = single_stress();
    let reg = s.model().stress();
    let c = reg.features(&[-0.5]);
    let grid = reg.region().grid(101);
    let xi = extrapolation_two_point(-0.5).unwrap();
    close(xi.weight_at(&[1.0]), 0.25, 5e-3);
    assert!(verify_c_optimality(&xi, reg, &grid, &c) <= 1e-6);
    let bar = ApproximateDesign::uniform(vec![vec![0.0], vec![1.0]]).unwrap();
    assert!(verify_c_optimality(&bar, reg, &grid, &c) > 0.0);
    let at = reg.features(&[0.3]);
    assert!(certificate_gap(&ApproximateDesign::one_point(vec![0.3]), reg, &at, &grid).abs() < 1e-12);
}

#[test]
fn stress_design_does_not_depend_on_alpha() {
    let s = single_stress();
    let times = equispaced_times(11);
    let a = optimal_stress_for_quantile(&s.with_alpha(0.1).unwrap(), 101, &times).unwrap();
    let b = optimal_stress_for_quantile(&s, 101, &times).unwrap();
    assert_eq!(a.design, b.design);
    close(b.design.weight_at(&[0.0]), 0.95, 5e-3);
}

#[test]
fn time_plans_for_example_two() {
    let s = two_stress_interaction();
    let grid = TimeGrid::new(0.05, 6).unwrap();
    let res = optimal_time_plan(&s, &grid, TimePlanOptions::default()).unwrap();
    let tau = &res.report.design;
    for t in [0.0, 0.05, 0.90, 0.95, 1.0] {
        close(tau.weight_at(&[t]), 1.0 / 6.0, 1e-6);
    }
    assert_eq!(time_plan_efficiency(tau, tau, &s, 6).unwrap(), 1.0);

    let tau0 = ApproximateDesign::uniform([0.0, 0.05, 0.10, 0.90, 0.95, 1.0].iter().map(|t| vec![*t]).collect()).unwrap();
    let uniform = ApproximateDesign::uniform(equispaced_times(6).into_iter().map(|t| vec![t]).collect()).unwrap();
    let e0 = time_plan_efficiency(&tau0, tau, &s, 6).unwrap();
    let eu = time_plan_efficiency(&uniform, tau, &s, 6).unwrap();
    close(e0, 0.987, 0.015);
    assert!(eu < e0, "{eu} vs {e0}");

    let p = s.variance_params();
    let scaled = s
        .with_variance_params(vec![p[0] * 10f64.sqrt(), p[1] * 10f64.sqrt(), p[2], p[3]])
        .unwrap();
    let again = optimal_time_plan(&scaled, &grid, TimePlanOptions::default()).unwrap();
    assert_eq!(again.grid_weights, res.grid_weights);
}

#[test]
fn destructive_designs() {
    let s1 = single_stress();
    close(sigma_ratio(&s1).unwrap(), 1.22, 5e-3);
    let d1 = destructive_optimal_design(&s1, 21, 101).unwrap();
    close(d1.time.weight_at(&[1.0]), 0.77, 5e-3);
    let shown = [([0.0, 0.0], 0.22), ([0.0, 1.0], 0.73), ([1.0, 0.0], 0.01), ([1.0, 1.0], 0.04)];
    for (x, w) in shown {
        close(d1.report.design.weight_at(&x), w, 5e-3);
    }
    close(pi_star(1e9, 1.0, sigma_ratio(&s1).unwrap()).unwrap(), 0.55, 5e-3);

    let s2 = two_stress_interaction();
    let ratio = ((0.98f64 + 0.7225) / (0.49 + 0.7225)).sqrt();
    assert_relative_eq!(sigma_ratio(&s2).unwrap(), ratio, max_relative = 1e-12);
    close(sigma_ratio(&s2).unwrap(), 1.185, 5e-4);
    let d2 = destructive_optimal_design(&s2, 21, 101).unwrap();
    close(d2.time.weight_at(&[1.0]), 0.57, 5e-3);

    let flat = s2.with_variance_params(vec![0.0, 0.0, 0.0, 0.85]).unwrap();
    assert_eq!(sigma_ratio(&flat).unwrap(), 1.0);
    let d3 = destructive_optimal_design(&flat, 11, 101).unwrap();
    let p = use_profile(&flat).delta().clone();
    close(d3.t_half, (flat.threshold() - p[0]) / p[1], 1e-12);
    close(d3.time.weight_at(&[1.0]), pi_star(d3.t_half, 1.0, 1.0).unwrap(), 1e-9);
}
