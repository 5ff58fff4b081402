//! Destructive testing (one measurement per unit): optimal product designs and the
//! sensitivity of the time marginal to the median failure time and to σ(1)/σ(0).

use adt_design::destructive::{
    default_range, destructive_optimal_design, pi_star_curve, sensitivity_curves, Probe,
};
use adt_design::presets::{single_stress, two_stress_interaction};

fn main() -> adt_design::Result<()> {
    for (name, s) in [("single stress", single_stress()), ("two interacting stresses", two_stress_interaction())] {
        let d = destructive_optimal_design(&s, 11, 101)?;
        println!(
            "{name}: t_0.5 = {:.3}, sigma(1)/sigma(0) = {:.3}, pi* = {:.3}",
            d.t_half,
            d.sigma_ratio,
            d.time.weight_at(&[1.0])
        );
        for (z, w) in d.report.design.iter() {
            println!("  {z:?}: {w:.4}");
        }
    }

    let s = single_stress();
    for probe in [Probe::MedianTime, Probe::SigmaRatio] {
        let rows = sensitivity_curves(&s, probe, default_range(probe), 8)?;
        let pis = pi_star_curve(&s, probe, default_range(probe), 8)?;
        println!("\n{probe:?}: probe, pi*, eff(nominal optimum), eff(2 points), eff(6 points)");
        for (r, (_, pi)) in rows.iter().zip(pis) {
            println!(
                "  {:>7.3} {pi:.3} {:.3} {:.3} {:.3}",
                r.probe_value, r.eff_optimal, r.eff_uniform2, r.eff_uniform6
            );
        }
    }
    Ok(())
}
