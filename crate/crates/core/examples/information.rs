//! Information matrices of the mixed-effects model: the Kronecker form of `M_β`, the closed
//! form of `(F2ᵀV⁻¹F2)⁻¹`, the variance-parameter block and the asymptotic variance of `t̂_α`.

use adt_design::failure::{avar_quantile, avar_quantile_dense};
use adt_design::linalg::max_rel_dev;
use adt_design::model::{
    build_time_matrix, info_varsigma, inverse_marginal_info, marginal_info, response_covariance, DerivativeRoute,
};
use adt_design::presets::{equispaced_times, single_stress};
use adt_design::stress::extrapolation_two_point;

fn main() -> adt_design::Result<()> {
    let s = single_stress();
    let times = equispaced_times(6);
    let f2 = build_time_matrix(&times, s.model().time_basis())?;
    let v = response_covariance(&f2, s.varcomps())?;
    let m2 = marginal_info(&f2, &v)?;
    let direct = m2.clone().try_inverse().expect("invertible");
    let lemma = inverse_marginal_info(&f2, s.varcomps())?;
    println!("(F2ᵀV⁻¹F2)⁻¹ = {lemma:.6}");
    println!("largest relative deviation from direct inversion: {:.2e}", max_rel_dev(&direct, &lemma));

    for route in [DerivativeRoute::Analytic, DerivativeRoute::FiniteDifference] {
        let m = info_varsigma(&f2, s.parametrization(), s.variance_params(), 1, route)?;
        println!("M_varsigma ({route:?}), rcond {:.2e}: {:.4}", m.rcond, m.matrix);
    }

    let xi = extrapolation_two_point(-0.056)?;
    for alpha in [0.1, 0.5, 0.9] {
        let sa = s.with_alpha(alpha)?;
        let a = avar_quantile(&sa, &xi, &times)?;
        let d = avar_quantile_dense(&sa, &xi, &times)?;
        println!(
            "alpha = {alpha}: t = {:.4}, aVar = {:.5} (beta {:.5} + varsigma {:.5}), dense {:.5}",
            a.t_alpha, a.total, a.beta_term, a.varsigma_term, d.total
        );
    }
    Ok(())
}
