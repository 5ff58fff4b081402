//! Monte Carlo check of the asymptotic variance of the estimated median failure time.
//!
//! Usage: `cargo run --release --example monte_carlo -- [n_units] [replications] [seed]`

use adt_design::design::uniform_grid_design;
use adt_design::estimation::{validate_avar, ExactDesign, SimulationSpec};
use adt_design::model::Region;
use adt_design::presets::{equispaced_times, single_stress};
use adt_design::stress::extrapolation_two_point;

fn main() -> adt_design::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(200) as usize;
    let reps = args.get(1).copied().unwrap_or(2000) as usize;
    let seed = args.get(2).copied().unwrap_or(1);

    let s = single_stress();
    let times = equispaced_times(11);
    let designs = [
        ("optimal", extrapolation_two_point(s.use_condition()[0])?),
        ("uniform 2-point", uniform_grid_design(2, &Region::unit(1))?),
    ];
    println!("n = {n}, replications = {reps}, seed = {seed}, 11 measurement times");
    for (name, xi) in designs {
        let exact = ExactDesign::from_approximate(&xi, n, times.clone())?;
        let spec = SimulationSpec::new(s.clone(), exact, reps, seed)?;
        let start = std::time::Instant::now();
        let r = validate_avar(&spec, 0.5)?;
        println!(
            "{name:>16}: t̂ mean {:.4}  Var {:.3e}  n·Var {:.4}  aVar {:.4}  ratio {:.3} [{:.3}, {:.3}]  degenerate {}  ({:.1?})",
            r.mean_estimate,
            r.empirical_variance,
            r.scaled_variance,
            r.avar,
            r.ratio,
            r.ratio_ci.0,
            r.ratio_ci.1,
            r.degenerate,
            start.elapsed()
        );
        for w in &r.warnings {
            println!("{:>16}  warning: {w}", "");
        }
    }
    Ok(())
}
