//! c-optimal stress designs: closed-form two-point designs, the uniform benchmarks for one
//! stress variable, the product design with interaction, and the Elfving LP for an additive
//! model where no closed form exists.

use adt_design::design::{c_criterion, uniform_grid_efficiency, ApproximateDesign, GridSize};
use adt_design::model::Regression;
use adt_design::presets::{equispaced_times, two_stress_additive, two_stress_interaction};
use adt_design::stress::{elfving_solve, extrapolation_two_point, optimal_stress_for_quantile, DEFAULT_GRID};

fn main() -> adt_design::Result<()> {
    println!("two-point extrapolation designs, weight at x = 1:");
    for xu in [-0.056, -0.4, -0.5, -1.0] {
        println!("  x_u = {xu:>6}: {:.4}", extrapolation_two_point(xu)?.weight_at(&[1.0]));
    }

    println!("\nefficiency of m equispaced points with equal weights:");
    print!("  {:>6}", "x_u");
    for m in ["2", "3", "4", "5", "inf"] {
        print!(" {m:>7}");
    }
    println!();
    for xu in [0.0, -0.056, -0.4, -0.5, -1.0, f64::NEG_INFINITY] {
        print!("  {xu:>6}");
        for m in [GridSize::Points(2), GridSize::Points(3), GridSize::Points(4), GridSize::Points(5), GridSize::Continuous] {
            print!(" {:>7.4}", uniform_grid_efficiency(m, xu));
        }
        println!();
    }

    let s2 = two_stress_interaction();
    let r = optimal_stress_for_quantile(&s2, DEFAULT_GRID, &equispaced_times(6))?;
    println!("\ninteraction model, x_u = {:?}:", s2.use_condition());
    for (x, w) in r.design.iter() {
        println!("  {x:?}: {w:.4}");
    }
    println!("  certificate gap {:.1e}", r.certificate_gap);

    let s3 = two_stress_additive();
    let reg = s3.model().stress();
    let cands = reg.region().grid(DEFAULT_GRID);
    let sol = elfving_solve(reg, &cands, &s3.c_stress())?;
    let corners = ApproximateDesign::uniform(reg.region().grid(2))?;
    let bar = c_criterion(&corners, reg, &s3.c_stress()).value;
    println!("\nadditive model on a {DEFAULT_GRID}x{DEFAULT_GRID} grid:");
    for (x, w) in sol.design.iter() {
        println!("  {x:?}: {w:.4}");
    }
    println!(
        "  criterion {:.4}, uniform corners {bar:.4}, efficiency {:.4}, dimension {}",
        sol.criterion,
        sol.criterion / bar,
        reg.dim()
    );
    Ok(())
}
