//! Optimal time plan with at most one measurement per time point: the weight profile on the
//! grid, the exact plan read off it, and its efficiency against equispaced measurements.

use adt_design::design::ApproximateDesign;
use adt_design::presets::{equispaced_times, two_stress_interaction};
use adt_design::time_plan::{
    adjust_to_exact_plan, optimal_time_plan, time_plan_efficiency, TimeGrid, TimePlanOptions,
};

fn main() -> adt_design::Result<()> {
    let s = two_stress_interaction();
    let grid = TimeGrid::new(0.05, 6)?;
    let r = optimal_time_plan(&s, &grid, TimePlanOptions::default())?;
    println!(
        "extrapolating to t_0.5 = {:.4}; {} iterations, gap {:.1e}",
        r.t_half, r.iterations, r.report.certificate_gap
    );
    for (t, w) in grid.points().iter().zip(&r.grid_weights) {
        let bar = "#".repeat((w / grid.cap() * 30.0).round() as usize);
        println!("  {t:.2} {w:.4} {bar}");
    }
    let plan = adjust_to_exact_plan(&r.report.design, &grid)?;
    let tau0 = ApproximateDesign::uniform(plan.iter().map(|t| vec![*t]).collect())?;
    println!("exact plan {plan:?}, efficiency {:.4}", time_plan_efficiency(&tau0, &r.report.design, &s, 6)?);
    let uniform = ApproximateDesign::uniform(equispaced_times(6).into_iter().map(|t| vec![t]).collect())?;
    println!("equispaced plan, efficiency {:.4}", time_plan_efficiency(&uniform, &r.report.design, &s, 6)?);
    Ok(())
}
