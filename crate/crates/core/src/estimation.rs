//! Simulation from the mixed-effects model and maximum-likelihood fitting, used to check the
//! asymptotic variance of quantile estimates by Monte Carlo.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::design::{fmt_num, round_to_exact, ApproximateDesign};
use crate::error::{Error, Result};
use crate::failure::{avar_quantile, use_profile, QuantileTime};
use crate::linalg::psd_factor;
use crate::model::{
    build_stress_matrix, build_time_matrix, gls_estimate, log_likelihood, response_covariance, Scenario,
    VarianceParametrization,
};
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Degenerate-estimate rate above which a validation run is flagged.
pub const DEGENERATE_RATE_LIMIT: f64 = 0.01;

/// Stress setting of every unit and the common measurement times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactDesign {
    pub settings: Vec<Vec<f64>>,
    pub times: Vec<f64>,
}

impl ExactDesign {
    pub fn new(settings: Vec<Vec<f64>>, times: Vec<f64>) -> Result<Self> {
        if settings.is_empty() || times.is_empty() {
            return Err(Error::InvalidInput("an exact design needs at least one unit and one time".into()));
        }
        Ok(Self { settings, times })
    }

    /// Apportions `n_units` to the support of `design` by largest remainders.
    pub fn from_approximate(design: &ApproximateDesign, n_units: usize, times: Vec<f64>) -> Result<Self> {
        let counts = round_to_exact(design, n_units)?;
        let settings = design
            .support()
            .iter()
            .zip(&counts)
            .flat_map(|(x, &c)| std::iter::repeat_n(x.clone(), c))
            .collect();
        Self::new(settings, times)
    }

    pub fn n_units(&self) -> usize {
        self.settings.len()
    }

    /// Empirical stress design of the units.
    pub fn stress_design(&self) -> Result<ApproximateDesign> {
        let n = self.settings.len() as f64;
        ApproximateDesign::new(self.settings.clone(), vec![1.0 / n; self.settings.len()])
    }
}

#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub scenario: Scenario,
    pub design: ExactDesign,
    pub replications: usize,
    pub base_seed: u64,
}

impl SimulationSpec {
    pub fn new(scenario: Scenario, design: ExactDesign, replications: usize, base_seed: u64) -> Result<Self> {
        if replications == 0 {
            return Err(Error::InvalidInput("replications must be at least 1".into()));
        }
        if design.settings.iter().any(|x| x.len() != scenario.model().stress_input_dim()) {
            return Err(Error::InvalidInput("stress settings do not match the model".into()));
        }
        build_time_matrix(&design.times, scenario.model().time_basis())?;
        Ok(Self {
            scenario,
            design,
            replications,
            base_seed,
        })
    }
}

/// Independent generator for replication `r`.
pub fn replicate_rng(base_seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(r);
    rng
}

struct Sampler {
    mean: DMatrix<f64>,
    f2: DMatrix<f64>,
    l_gamma: DMatrix<f64>,
    l_eps: DMatrix<f64>,
}

impl Sampler {
    fn new(spec: &SimulationSpec) -> Result<Self> {
        let s = &spec.scenario;
        let f1 = build_stress_matrix(&spec.design.settings, s.model())?;
        let f2 = build_time_matrix(&spec.design.times, s.model().time_basis())?;
        let (p1, p2) = (s.model().p1(), s.model().p2());
        let b = DMatrix::from_fn(p1, p2, |r, c| s.beta()[r * p2 + c]);
        let k = spec.design.times.len();
        Ok(Self {
            mean: &f1 * b * f2.transpose(),
            l_gamma: psd_factor(s.varcomps().sigma_gamma()),
            l_eps: psd_factor(&s.varcomps().sigma_eps_matrix(k)?),
            f2,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let (n, k) = self.mean.shape();
        let q = self.l_gamma.ncols();
        let mut y = self.mean.clone();
        let mut z = |m: usize| DVector::from_iterator(m, (0..m).map(|_| StandardNormal.sample(rng)));
        for i in 0..n {
            let gamma = &self.l_gamma * z(q);
            let eps = &self.l_eps * z(k);
            let dev = &self.f2 * gamma + eps;
            for j in 0..k {
                y[(i, j)] += dev[j];
            }
        }
        y
    }
}

/// Observations of replication `r`, `n_units x k`.
pub fn simulate_replicate(spec: &SimulationSpec, r: usize) -> Result<DMatrix<f64>> {
    let sampler = Sampler::new(spec)?;
    Ok(sampler.draw(&mut replicate_rng(spec.base_seed, r as u64)))
}

/// All replications, indexed replication, unit, time.
pub fn simulate_paths(spec: &SimulationSpec) -> Result<Vec<DMatrix<f64>>> {
    let sampler = Sampler::new(spec)?;
    Ok((0..spec.replications)
        .into_par_iter()
        .map(|r| sampler.draw(&mut replicate_rng(spec.base_seed, r as u64)))
        .collect())
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Keep `ς` at its initial value and only estimate `β`.
    pub fix_variance: bool,
    pub optimizer: NelderMeadOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fix_variance: false,
            optimizer: NelderMeadOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MlFit {
    pub beta: Vec<f64>,
    pub variance_params: Vec<f64>,
    pub log_likelihood: f64,
    pub initial_log_likelihood: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out; the fit is then the best iterate.
    pub converged: bool,
}

fn profile(
    y: &DMatrix<f64>,
    f1: &DMatrix<f64>,
    f2: &DMatrix<f64>,
    par: &dyn VarianceParametrization,
    params: &[f64],
) -> Result<(DVector<f64>, f64)> {
    let v = response_covariance(f2, &par.components(params)?)?;
    let beta = gls_estimate(y, f1, f2, &v)?;
    let ll = log_likelihood(&beta, f1, f2, &v, y)?;
    Ok((beta, ll))
}

/// Maximum likelihood by profiling: `β̂(ς)` is the GLS estimate, and `ς` is found by
/// Nelder–Mead on the unconstrained scale of the parametrization.
pub fn fit_ml(
    y: &DMatrix<f64>,
    f1: &DMatrix<f64>,
    f2: &DMatrix<f64>,
    par: &dyn VarianceParametrization,
    init: &[f64],
    opts: FitOptions,
) -> Result<MlFit> {
    if init.len() != par.dim() {
        return Err(Error::InvalidInput(format!(
            "initial value has {} entries, the parametrization {}",
            init.len(),
            par.dim()
        )));
    }
    let (beta0, ll0) = profile(y, f1, f2, par, init)?;
    if opts.fix_variance || par.dim() == 0 {
        return Ok(MlFit {
            beta: beta0.as_slice().to_vec(),
            variance_params: init.to_vec(),
            log_likelihood: ll0,
            initial_log_likelihood: ll0,
            evaluations: 1,
            converged: true,
        });
    }
    let u0 = par.to_unconstrained(init);
    let objective = |u: &[f64]| match profile(y, f1, f2, par, &par.from_unconstrained(u)) {
        Ok((_, ll)) => -ll,
        Err(_) => f64::INFINITY,
    };
    let m = nelder_mead(objective, &u0, opts.optimizer);
    let (params, beta, ll) = if -m.value > ll0 {
        let p = par.from_unconstrained(&m.x);
        let (b, ll) = profile(y, f1, f2, par, &p)?;
        (p, b, ll)
    } else {
        (init.to_vec(), beta0, ll0)
    };
    Ok(MlFit {
        beta: beta.as_slice().to_vec(),
        variance_params: params,
        log_likelihood: ll,
        initial_log_likelihood: ll0,
        evaluations: m.evals,
        converged: m.converged,
    })
}

/// Estimated `α`-quantile from a fit; `None` when it is not a finite positive time.
pub fn quantile_estimate(s: &Scenario, fit: &MlFit, alpha: f64) -> Option<f64> {
    let est = s
        .with_beta(fit.beta.clone())
        .and_then(|e| e.with_variance_params(fit.variance_params.clone()))
        .ok()?;
    match use_profile(&est).quantile(alpha).ok()? {
        QuantileTime::Finite(t) if t.is_finite() => Some(t),
        _ => None,
    }
}

/// Neumaier-compensated sum.
fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub alpha: f64,
    pub n_units: usize,
    pub replications: usize,
    pub base_seed: u64,
    pub t_alpha: f64,
    pub mean_estimate: f64,
    pub empirical_variance: f64,
    /// `n · Var(t̂_α)`.
    pub scaled_variance: f64,
    /// Standardized asymptotic variance.
    pub avar: f64,
    pub ratio: f64,
    /// 95% interval for the ratio from the chi-square law of the sample variance.
    pub ratio_ci: (f64, f64),
    pub degenerate: usize,
    pub degenerate_rate: f64,
    /// Degenerate rate above [`DEGENERATE_RATE_LIMIT`].
    pub unreliable: bool,
    pub non_converged: usize,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub estimates: Vec<Option<f64>>,
}

/// Simulates, refits every replication and compares `n · Var(t̂_α)` with the asymptotic variance.
pub fn validate_avar(spec: &SimulationSpec, alpha: f64) -> Result<ValidationReport> {
    let s = spec.scenario.with_alpha(alpha)?;
    let d = &spec.design;
    let n = d.n_units();
    let avar = avar_quantile(&s, &d.stress_design()?, &d.times)?;
    let f1 = build_stress_matrix(&d.settings, s.model())?;
    let f2 = build_time_matrix(&d.times, s.model().time_basis())?;
    let sampler = Sampler::new(spec)?;
    let par = s.parametrization();
    let fits: Vec<(Option<f64>, bool)> = (0..spec.replications)
        .into_par_iter()
        .map(|r| {
            let y = sampler.draw(&mut replicate_rng(spec.base_seed, r as u64));
            match fit_ml(&y, &f1, &f2, par, s.variance_params(), FitOptions::default()) {
                Ok(fit) => (quantile_estimate(&s, &fit, alpha), fit.converged),
                Err(_) => (None, false),
            }
        })
        .collect();
    let estimates: Vec<Option<f64>> = fits.iter().map(|f| f.0).collect();
    let non_converged = fits.iter().filter(|f| !f.1).count();
    let good: Vec<f64> = estimates.iter().flatten().copied().collect();
    let m = good.len();
    let degenerate = spec.replications - m;
    let degenerate_rate = degenerate as f64 / spec.replications as f64;
    let mut warnings = Vec::new();
    let mean = if m > 0 {
        compensated_sum(good.iter().copied()) / m as f64
    } else {
        f64::NAN
    };
    let var = if m > 1 {
        compensated_sum(good.iter().map(|t| (t - mean).powi(2))) / (m - 1) as f64
    } else {
        warnings.push("fewer than two finite estimates: the empirical variance is undefined".into());
        f64::NAN
    };
    let ratio = n as f64 * var / avar.total;
    let ratio_ci = if m > 1 {
        let chi = ChiSquared::new((m - 1) as f64).map_err(|e| Error::Domain(e.to_string()))?;
        let dof = (m - 1) as f64;
        (ratio * dof / chi.inverse_cdf(0.975), ratio * dof / chi.inverse_cdf(0.025))
    } else {
        (f64::NAN, f64::NAN)
    };
    let unreliable = degenerate_rate > DEGENERATE_RATE_LIMIT;
    if unreliable {
        warnings.push(format!(
            "{degenerate} of {} estimates are degenerate: asymptotics are unreliable at n = {n}",
            spec.replications
        ));
    }
    if non_converged > 0 {
        warnings.push(format!("{non_converged} fits stopped at the evaluation budget"));
    }
    Ok(ValidationReport {
        alpha,
        n_units: n,
        replications: spec.replications,
        base_seed: spec.base_seed,
        t_alpha: avar.t_alpha,
        mean_estimate: mean,
        empirical_variance: var,
        scaled_variance: n as f64 * var,
        avar: avar.total,
        ratio,
        ratio_ci,
        degenerate,
        degenerate_rate,
        unreliable,
        non_converged,
        warnings,
        estimates,
    })
}

/// CSV with columns `replicate,t_hat`; degenerate replicates have an empty `t_hat`.
pub fn write_estimates_csv<W: Write>(out: W, estimates: &[Option<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["replicate", "t_hat"]).map_err(err)?;
    for (r, t) in estimates.iter().enumerate() {
        w.write_record([r.to_string(), t.map(fmt_num).unwrap_or_default()]).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `replicate,unit,x1..,t,y`.
pub fn write_paths_csv<W: Write>(out: W, design: &ExactDesign, paths: &[DMatrix<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    let dim = design.settings.first().map_or(0, |x| x.len());
    let mut header = vec!["replicate".to_string(), "unit".to_string()];
    header.extend((1..=dim).map(|i| format!("x{i}")));
    header.extend(["t".to_string(), "y".to_string()]);
    w.write_record(&header).map_err(err)?;
    for (r, y) in paths.iter().enumerate() {
        for (i, x) in design.settings.iter().enumerate() {
            for (j, t) in design.times.iter().enumerate() {
                let mut rec = vec![r.to_string(), i.to_string()];
                rec.extend(x.iter().map(|v| fmt_num(*v)));
                rec.push(fmt_num(*t));
                rec.push(fmt_num(y[(i, j)]));
                w.write_record(&rec).map_err(err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
