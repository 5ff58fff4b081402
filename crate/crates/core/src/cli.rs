//! Command-line front end: scenario ingestion, command dispatch and report files.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::design::{
    c_criterion, certificate_gap, efficiency, fmt_num, round_sig, uniform_grid_efficiency, ApproximateDesign,
    CriterionReport, DesignReport, GridSize,
};
use crate::destructive::{
    default_range, destructive_optimal_design, pi_star_curve, sensitivity_curves, write_sensitivity_csv, Probe,
    PROBE_POINTS,
};
use crate::error::{Error, Result};
use crate::estimation::{simulate_paths, validate_avar, write_estimates_csv, write_paths_csv, ExactDesign, SimulationSpec};
use crate::failure::{avar_quantile, quantile, use_profile, write_curve_csv, QuantileTime};
use crate::model::{BasisKind, Regression, Scenario};
use crate::scenario::{load_scenario, ScenarioFile};
use crate::stress::{extrapolation_design, optimal_stress_for_quantile, DEFAULT_GRID};
use crate::time_plan::{
    adjust_to_exact_plan, fixed_effect_efficiency, optimal_time_plan, time_plan_efficiency, write_weight_profile_csv,
    TimeGrid, TimePlanOptions,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "adt-design", version, about = "Optimal designs for accelerated degradation tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quantile of the failure-time distribution under normal use, with h and F_T on a grid.
    FailureTime(FailureTimeArgs),
    /// Optimal designs.
    Design {
        #[command(subcommand)]
        kind: DesignKind,
    },
    /// Criterion, efficiency and certificate of a stress design read from CSV.
    Efficiency(EfficiencyArgs),
    /// Monte Carlo check of the asymptotic variance of the estimated quantile.
    Validate(ValidateArgs),
    /// Simulated degradation paths.
    Simulate(SimulateArgs),
}

#[derive(Debug, Subcommand)]
enum DesignKind {
    /// c-optimal stress design for the quantile.
    Stress(DesignArgs),
    /// Optimal capped time plan.
    Time(DesignArgs),
    /// Product design for destructive testing.
    Destructive(DesignArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Quantile level; defaults to the scenario's.
    #[arg(long)]
    alpha: Option<f64>,
    /// Directory for report files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FailureTimeArgs {
    #[command(flatten)]
    common: Common,
    /// Points of the h / F_T curve.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Write the curve to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DesignArgs {
    #[command(flatten)]
    common: Common,
    /// Candidate points per axis (stress, destructive) or time-grid points (time).
    #[arg(long)]
    grid: Option<usize>,
    /// Measurements per unit for the time plan.
    #[arg(long)]
    k: Option<usize>,
    /// Add efficiencies of uniform benchmark designs.
    #[arg(long)]
    benchmark: bool,
    /// Write the design to this CSV file as well.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EfficiencyArgs {
    #[command(flatten)]
    common: Common,
    /// Stress design CSV (`x1,...,weight`).
    design: PathBuf,
    /// Candidate points per axis for the reference optimum and the certificate.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Add efficiencies of uniform benchmark designs.
    #[arg(long)]
    benchmark: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: Common,
    /// Stress design CSV, apportioned to `n` units.
    design: PathBuf,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write per-replicate estimates to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Stress design CSV, apportioned to `n` units.
    design: PathBuf,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

enum Failure {
    Error(Error),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(Error::Io(e))
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs the command line with process streams; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Same as [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let res = match cli.command {
        Command::FailureTime(a) => cmd_failure_time(&a, out),
        Command::Design { kind } => match kind {
            DesignKind::Stress(a) => cmd_design_stress(&a, out),
            DesignKind::Time(a) => cmd_design_time(&a, out),
            DesignKind::Destructive(a) => cmd_design_destructive(&a, out),
        },
        Command::Efficiency(a) => cmd_efficiency(&a, out),
        Command::Validate(a) => cmd_validate(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(Failure::Validation(msg)) => {
            let _ = writeln!(err, "validation failed: {msg}");
            EXIT_VALIDATION
        }
        Err(Failure::Error(e)) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::DegenerateQuantile(_) | Error::Ambiguous { .. } => EXIT_DEGENERATE,
                _ => EXIT_INPUT,
            }
        }
    }
}

fn load(common: &Common) -> Result<(ScenarioFile, Scenario)> {
    let (file, s) = load_scenario(&common.scenario)?;
    let s = match common.alpha {
        Some(a) => s.with_alpha(a)?,
        None => s,
    };
    Ok((file, s))
}

/// JSON with every number rounded to 12 significant digits; non-finite numbers become null.
pub fn to_json<T: Serialize>(v: &T) -> String {
    fn round(v: &mut Value) {
        match v {
            Value::Number(n) => {
                if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                    *v = serde_json::Number::from_f64(round_sig(f, 12)).map_or(Value::Null, Value::Number);
                }
            }
            Value::Array(a) => a.iter_mut().for_each(round),
            Value::Object(o) => o.values_mut().for_each(round),
            _ => {}
        }
    }
    let mut value = serde_json::to_value(v).expect("report serializes");
    round(&mut value);
    let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
    s.push('\n');
    s
}

fn out_dir(common: &Common) -> Result<Option<&Path>> {
    match &common.out_dir {
        Some(d) => {
            fs::create_dir_all(d)?;
            Ok(Some(d.as_path()))
        }
        None => Ok(None),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn read_design(path: &Path, s: &Scenario) -> Result<ApproximateDesign> {
    let f = File::open(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let d = ApproximateDesign::read_csv(f)?;
    let dim = s.model().stress_input_dim();
    if d.dim() != dim {
        return Err(Error::InvalidInput(format!(
            "{} has {} coordinates, the scenario has {dim} stress variables",
            path.display(),
            d.dim()
        )));
    }
    if !d.within(&s.model().stress().region()) {
        return Err(Error::InvalidInput(format!("{} has points outside the stress region", path.display())));
    }
    Ok(d)
}

/// Design as written to CSV, so that criteria in reports match a re-read file.
fn as_written(d: &ApproximateDesign) -> Result<ApproximateDesign> {
    let support = d.support().iter().map(|x| x.iter().map(|v| round_sig(*v, 12)).collect()).collect();
    let weights = d.weights().iter().map(|w| round_sig(*w, 12)).collect();
    ApproximateDesign::normalized(support, weights)
}

fn names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

#[derive(Serialize)]
struct FailureTimeReport {
    alpha: f64,
    z_alpha: f64,
    delta: Vec<f64>,
    t_alpha: Option<f64>,
    h_at_zero: f64,
    h_limit: f64,
    alpha_min: f64,
    alpha_max: f64,
    c0: Option<f64>,
    c_beta: Option<Vec<f64>>,
    c_varsigma: Option<Vec<f64>>,
}

fn cmd_failure_time(a: &FailureTimeArgs, out: &mut dyn Write) -> CmdResult {
    let (_, s) = load(&a.common)?;
    let prof = use_profile(&s);
    let q = quantile(&s)?;
    let report = FailureTimeReport {
        alpha: q.alpha,
        z_alpha: q.z_alpha,
        delta: prof.delta().as_slice().to_vec(),
        t_alpha: q.t_alpha.finite(),
        h_at_zero: prof.h(0.0)?,
        h_limit: prof.h_limit(),
        alpha_min: prof.alpha_min()?,
        alpha_max: prof.alpha_max(),
        c0: q.gradient.as_ref().map(|g| g.c0),
        c_beta: q.gradient.as_ref().map(|g| g.c_beta.clone()),
        c_varsigma: q.gradient.as_ref().map(|g| g.c_varsigma.clone()),
    };
    let json = to_json(&report);
    let horizon = match q.t_alpha {
        QuantileTime::Finite(t) => (2.0 * t).max(1.0),
        _ => 10.0,
    };
    let n = a.grid.max(2);
    let times: Vec<f64> = (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect();
    let curve = prof.curve(&times)?;
    if let Some(dir) = out_dir(&a.common)? {
        write_text(&dir.join("failure_time.json"), &json)?;
        write_curve_csv(create(&dir.join("failure_curve.csv"))?, &curve)?;
    }
    if let Some(path) = &a.csv {
        write_curve_csv(create(path)?, &curve)?;
    }
    out.write_all(json.as_bytes())?;
    match q.t_alpha {
        QuantileTime::Finite(_) => Ok(()),
        QuantileTime::Infinite => Err(Error::DegenerateQuantile(format!(
            "alpha = {} is at or above alpha_max = {}: this fraction of units never fails",
            q.alpha,
            fmt_num(report.alpha_max)
        ))
        .into()),
        QuantileTime::AtZero => Err(Error::DegenerateQuantile(format!(
            "alpha = {} is at or below alpha_min = {}: this fraction has failed at time zero",
            q.alpha,
            fmt_num(report.alpha_min)
        ))
        .into()),
    }
}

fn stress_benchmarks(s: &Scenario, design: &ApproximateDesign) -> Vec<(String, f64)> {
    let reg = s.model().stress();
    let c = s.c_stress();
    let factors = reg.factors();
    let unit_line = factors.len() == 1
        && matches!(factors[0].kind(), BasisKind::Linear)
        && factors[0].region().bounds() == [(0.0, 1.0)];
    let mut out = Vec::new();
    for m in 2..=5 {
        let Ok(bar) = ApproximateDesign::uniform(reg.region().grid(m)) else { continue };
        if let Ok(e) = efficiency(&bar, design, reg, &c) {
            out.push((format!("efficiency_uniform_{m}"), e.value));
        }
    }
    if unit_line {
        out.push((
            "efficiency_uniform_continuous".into(),
            uniform_grid_efficiency(GridSize::Continuous, s.use_condition()[0]),
        ));
    }
    out
}

fn finish_design(
    report: &mut DesignReport,
    reg: &dyn Regression,
    c: &nalgebra::DVector<f64>,
) -> Result<()> {
    report.design = as_written(&report.design)?;
    report.criterion = c_criterion(&report.design, reg, c);
    Ok(())
}

fn emit_design(
    a: &DesignArgs,
    out: &mut dyn Write,
    stem: &str,
    design: &ApproximateDesign,
    coord_names: &[String],
    json: &str,
    summary: &str,
) -> Result<()> {
    if let Some(dir) = out_dir(&a.common)? {
        design.write_csv(create(&dir.join(format!("{stem}_design.csv")))?, coord_names)?;
        write_text(&dir.join(format!("{stem}_report.json")), json)?;
    }
    if let Some(path) = &a.csv {
        design.write_csv(create(path)?, coord_names)?;
    }
    out.write_all(summary.as_bytes())?;
    Ok(())
}

fn design_table(design: &ApproximateDesign, coord_names: &[String]) -> String {
    let mut t = String::new();
    t.push_str(&format!("  {}  weight\n", coord_names.join("  ")));
    for (x, w) in design.iter() {
        let xs: Vec<String> = x.iter().map(|v| format!("{v:.4}")).collect();
        t.push_str(&format!("  {}  {w:.4}\n", xs.join("  ")));
    }
    t
}

fn cmd_design_stress(a: &DesignArgs, out: &mut dyn Write) -> CmdResult {
    let (file, s) = load(&a.common)?;
    let grid = a.grid.unwrap_or(DEFAULT_GRID);
    let times = file.measurement_times()?;
    let mut report = optimal_stress_for_quantile(&s, grid, &times)?;
    let reg = s.model().stress();
    let c = s.c_stress();
    finish_design(&mut report, reg, &c)?;
    if a.benchmark {
        report.benchmarks.extend(stress_benchmarks(&s, &report.design));
    }
    let coord = names("x", s.model().stress_input_dim());
    let mut summary = format!(
        "stress design (criterion {}, certificate gap {:.2e})\n",
        fmt_num(report.criterion.value),
        report.certificate_gap
    );
    summary.push_str(&design_table(&report.design, &coord));
    for (k, v) in &report.benchmarks {
        summary.push_str(&format!("  {k}: {}\n", fmt_num(*v)));
    }
    emit_design(a, out, "stress", &report.design, &coord, &to_json(&report), &summary)?;
    Ok(())
}

#[derive(Serialize)]
struct TimeReport<'a> {
    #[serde(flatten)]
    report: &'a DesignReport,
    delta_t: f64,
    k: usize,
    t_half: f64,
    iterations: usize,
    converged: bool,
    exact_plan: Vec<f64>,
    exact_plan_efficiency: f64,
    exact_plan_fixed_effect_efficiency: f64,
}

fn cmd_design_time(a: &DesignArgs, out: &mut dyn Write) -> CmdResult {
    let (file, s) = load(&a.common)?;
    let from_file = file.time_plan;
    let delta_t = match a.grid {
        Some(n) if n >= 2 => 1.0 / (n - 1) as f64,
        Some(n) => return Err(Error::InvalidInput(format!("--grid {n}: need at least two time points")).into()),
        None => from_file.map_or(0.05, |p| p.delta_t),
    };
    let k = a.k.or(from_file.map(|p| p.k)).unwrap_or(6);
    let grid = TimeGrid::new(delta_t, k)?;
    let mut res = optimal_time_plan(&s, &grid, TimePlanOptions::default())?;
    let basis = s.model().time_basis();
    let c = basis.eval(&[res.t_half]);
    finish_design(&mut res.report, basis, &c)?;
    let plan = adjust_to_exact_plan(&res.report.design, &grid)?;
    let tau0 = ApproximateDesign::uniform(plan.iter().map(|t| vec![*t]).collect())?;
    let eff = time_plan_efficiency(&tau0, &res.report.design, &s, k)?;
    let eff_fixed = fixed_effect_efficiency(&tau0, &res.report.design, &s)?;
    if !a.benchmark {
        res.report.benchmarks.clear();
    }
    let report = TimeReport {
        report: &res.report,
        delta_t,
        k,
        t_half: res.t_half,
        iterations: res.iterations,
        converged: res.converged,
        exact_plan: plan.clone(),
        exact_plan_efficiency: eff,
        exact_plan_fixed_effect_efficiency: eff_fixed,
    };
    let coord = vec!["t".to_string()];
    let mut summary = format!(
        "time plan on a grid of step {} with k = {k} (cap {}), extrapolating to t_0.5 = {}\n",
        fmt_num(delta_t),
        fmt_num(grid.cap()),
        fmt_num(res.t_half)
    );
    summary.push_str(&design_table(&res.report.design, &coord));
    let shown: Vec<String> = plan.iter().map(|t| format!("{t:.2}")).collect();
    summary.push_str(&format!(
        "  exact plan: {}  (efficiency {}, fixed-effect efficiency {})\n",
        shown.join(", "),
        fmt_num(eff),
        fmt_num(eff_fixed)
    ));
    for (k, v) in &res.report.benchmarks {
        summary.push_str(&format!("  {k}: {}\n", fmt_num(*v)));
    }
    emit_design(a, out, "time", &res.report.design, &coord, &to_json(&report), &summary)?;
    if let Some(dir) = out_dir(&a.common)? {
        write_weight_profile_csv(create(&dir.join("time_weights.csv"))?, &grid, &res.grid_weights)?;
    }
    Ok(())
}

/// Certificate grid for destructive designs: per stress axis and in time.
const DESTRUCTIVE_STRESS_GRID: usize = 21;
const DESTRUCTIVE_TIME_GRID: usize = 101;

fn cmd_design_destructive(a: &DesignArgs, out: &mut dyn Write) -> CmdResult {
    let (_, s) = load(&a.common)?;
    let grid = a.grid.unwrap_or(DESTRUCTIVE_STRESS_GRID);
    let mut d = destructive_optimal_design(&s, grid, DESTRUCTIVE_TIME_GRID)?;
    let wm = crate::destructive::WeightedTimeModel::from_scenario(&s)?;
    let reg = crate::model::KroneckerRegression {
        first: s.model().stress(),
        second: &wm,
    };
    let c = crate::linalg::kron_vec(&s.c_stress(), &wm.basis().eval(&[d.t_half]));
    finish_design(&mut d.report, &reg, &c)?;
    if !a.benchmark {
        d.report.benchmarks.clear();
    }
    let mut coord = names("x", s.model().stress_input_dim());
    coord.push("t".into());
    let mut summary = format!(
        "destructive design for t_0.5 = {} (sigma(1)/sigma(0) = {}, criterion {}, certificate gap {:.2e})\n",
        fmt_num(d.t_half),
        fmt_num(d.sigma_ratio),
        fmt_num(d.report.criterion.value),
        d.report.certificate_gap
    );
    summary.push_str(&design_table(&d.report.design, &coord));
    for (k, v) in &d.report.benchmarks {
        summary.push_str(&format!("  {k}: {}\n", fmt_num(*v)));
    }
    emit_design(a, out, "destructive", &d.report.design, &coord, &to_json(&d), &summary)?;
    if let Some(dir) = out_dir(&a.common)? {
        for (probe, stem) in [(Probe::MedianTime, "median_time"), (Probe::SigmaRatio, "sigma_ratio")] {
            let range = default_range(probe);
            // ratio probes need the (sigma1, sigma2, rho, sigma_eps) straight-line setup
            let Ok(rows) = sensitivity_curves(&s, probe, range, PROBE_POINTS) else { continue };
            write_sensitivity_csv(create(&dir.join(format!("sensitivity_{stem}.csv")))?, &rows)?;
            let pis = pi_star_curve(&s, probe, range, PROBE_POINTS)?;
            let mut w = create(&dir.join(format!("pi_star_{stem}.csv")))?;
            writeln!(w, "probe_value,pi_star")?;
            for (v, p) in pis {
                writeln!(w, "{},{}", fmt_num(v), fmt_num(p))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EfficiencyReport {
    #[serde(flatten)]
    report: CriterionReport,
    design: ApproximateDesign,
    reference: ApproximateDesign,
}

fn cmd_efficiency(a: &EfficiencyArgs, out: &mut dyn Write) -> CmdResult {
    let (file, s) = load(&a.common)?;
    let design = read_design(&a.design, &s)?;
    let reg = s.model().stress();
    let c = s.c_stress();
    let reference = as_written(&extrapolation_design(&s, a.grid)?)?;
    let crit = c_criterion(&design, reg, &c);
    let eff = efficiency(&design, &reference, reg, &c)?;
    let gap = certificate_gap(&design, reg, &c, &reg.region().grid(a.grid));
    let mut flags = Vec::new();
    if !crit.feasible {
        flags.push("f1(x_u) is not estimable under this design".to_string());
    }
    if crit.non_estimable_full_model {
        flags.push("information matrix is singular".to_string());
    }
    if gap > 1e-6 {
        flags.push("not c-optimal on the candidate grid".to_string());
    }
    let mut benchmarks = std::collections::BTreeMap::new();
    if let Ok(av) = avar_quantile(&s, &design, &file.measurement_times()?) {
        benchmarks.insert("avar_standardized".to_string(), av.total);
    }
    if a.benchmark {
        benchmarks.extend(stress_benchmarks(&s, &reference));
    }
    let report = EfficiencyReport {
        report: CriterionReport {
            criterion_value: crit.value,
            efficiency: eff.value,
            certificate_gap: gap,
            benchmark_values: benchmarks,
            flags,
        },
        design,
        reference,
    };
    let json = to_json(&report);
    if let Some(dir) = out_dir(&a.common)? {
        write_text(&dir.join("efficiency_report.json"), &json)?;
    }
    out.write_all(json.as_bytes())?;
    Ok(())
}

fn simulation_spec(common: &Common, design: &Path, n: usize, reps: usize, seed: u64) -> Result<(Scenario, SimulationSpec)> {
    let (file, s) = load(common)?;
    let xi = read_design(design, &s)?;
    let exact = ExactDesign::from_approximate(&xi, n, file.measurement_times()?)?;
    let spec = SimulationSpec::new(s.clone(), exact, reps, seed)?;
    Ok((s, spec))
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> CmdResult {
    let (s, spec) = simulation_spec(&a.common, &a.design, a.n, a.reps, a.seed)?;
    let report = validate_avar(&spec, s.alpha())?;
    let json = to_json(&report);
    if let Some(dir) = out_dir(&a.common)? {
        write_text(&dir.join("validation_report.json"), &json)?;
        write_estimates_csv(create(&dir.join("replicates.csv"))?, &report.estimates)?;
    }
    if let Some(path) = &a.csv {
        write_estimates_csv(create(path)?, &report.estimates)?;
    }
    out.write_all(json.as_bytes())?;
    if report.unreliable {
        return Err(Failure::Validation(format!(
            "degenerate-estimate rate {} exceeds {}",
            fmt_num(report.degenerate_rate),
            crate::estimation::DEGENERATE_RATE_LIMIT
        )));
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let (_, spec) = simulation_spec(&a.common, &a.design, a.n, a.reps, a.seed)?;
    let paths = simulate_paths(&spec)?;
    match (&a.csv, out_dir(&a.common)?) {
        (Some(path), _) => write_paths_csv(create(path)?, &spec.design, &paths)?,
        (None, Some(dir)) => write_paths_csv(create(&dir.join("paths.csv"))?, &spec.design, &paths)?,
        (None, None) => write_paths_csv(&mut *out, &spec.design, &paths)?,
    }
    Ok(())
}
