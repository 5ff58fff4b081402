//! Failure-time distribution under normal use for the two worked scenarios.
//!
//! Prints the median failure time, the limits of `h`, and a short table of `F_T(t)`.

use adt_design::failure::{quantile, use_profile};
use adt_design::presets::{single_stress, two_stress_interaction};

fn main() -> adt_design::Result<()> {
    for (name, s) in [("single stress", single_stress()), ("two interacting stresses", two_stress_interaction())] {
        let prof = use_profile(&s);
        let q = quantile(&s)?;
        println!("{name}");
        println!("  delta = {:?}", prof.delta().as_slice());
        println!("  h(0) = {:.3}, lim h = {:.3}, alpha_max = {:.3}", prof.h(0.0)?, prof.h_limit(), prof.alpha_max());
        match q.t_alpha.finite() {
            Some(t) => println!("  t_0.5 = {t:.4}"),
            None => println!("  t_0.5 is degenerate: {:?}", q.t_alpha),
        }
        for alpha in [0.1, 0.5, 0.9] {
            println!("  t_{alpha} = {:?}", prof.quantile(alpha)?);
        }
        let horizon = 2.0 * q.t_alpha.finite().unwrap_or(1.0);
        let times: Vec<f64> = (0..=8).map(|i| horizon * i as f64 / 8.0).collect();
        println!("  {:>8} {:>10} {:>8}", "t", "h(t)", "F_T(t)");
        for (t, h, f) in prof.curve(&times)? {
            println!("  {t:>8.3} {h:>10.3} {f:>8.4}");
        }
    }
    Ok(())
}
