use std::io::Write;

use rayon::prelude::*;

use super::fit::{fit_rate, RateFit};
use super::initial::InitialCondition;
use super::stats::mean_and_se;
use crate::error::{invalid, Error, Result};
use crate::noise::{build_noise_model, sample_wiener_path, NoiseKind, NoiseModel, WienerPath};
use crate::schemes::{integrate, run_trajectory, SchemeKind, SchemeParams, TrajectoryRecord};
use crate::schemes::{DEFAULT_INNER_SUBSTEPS, DEFAULT_SOLVER_MAX_ITER, DEFAULT_SOLVER_TOL};
use crate::spectral::{Grid, SpectralField};

/// Noise covariance `lambda_k = amplitude |k|^(-2 exponent)` plus coefficient kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub amplitude: f64,
    pub exponent: f64,
    pub kind: NoiseKind,
}

impl NoiseSpec {
    pub fn build(&self, grid: Grid) -> Result<NoiseModel> {
        build_noise_model(grid, self.amplitude, self.exponent, self.kind)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub grid: Grid,
    pub viscosity: f64,
    pub horizon: f64,
    pub noise: NoiseSpec,
    pub initial: InitialCondition,
    pub scheme: SchemeKind,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    pub inner_substeps: usize,
    pub ladder: Vec<usize>,
    pub reference_n: usize,
    pub mc_samples: usize,
    pub base_seed: u64,
    /// Also run the splitting scheme at `reference_n` and report its gap to
    /// the reference.
    pub reference_cross_check: bool,
}

impl StudyConfig {
    /// Config with the default solver settings, ladder `{8,...,128}`,
    /// reference 2048 and 64 samples.
    pub fn new(grid: Grid, viscosity: f64, horizon: f64, noise: NoiseSpec, scheme: SchemeKind) -> Self {
        Self {
            grid,
            viscosity,
            horizon,
            noise,
            initial: InitialCondition::Zero,
            scheme,
            solver_tol: DEFAULT_SOLVER_TOL,
            solver_max_iter: DEFAULT_SOLVER_MAX_ITER,
            inner_substeps: DEFAULT_INNER_SUBSTEPS,
            ladder: vec![8, 16, 32, 64, 128],
            reference_n: 2048,
            mc_samples: 64,
            base_seed: 0,
            reference_cross_check: false,
        }
    }

    /// Scheme parameters at `n` steps.
    pub fn scheme_params(&self, kind: SchemeKind, n: usize) -> SchemeParams {
        SchemeParams {
            kind,
            viscosity: self.viscosity,
            horizon: self.horizon,
            n_steps: n,
            solver_tol: self.solver_tol,
            solver_max_iter: self.solver_max_iter,
            inner_substeps: self.inner_substeps,
            advection: true,
        }
    }

    /// Seed of the fine path of sample `i`.
    pub fn sample_seed(&self, i: usize) -> u64 {
        self.base_seed ^ i as u64
    }

    pub fn validate(&self) -> Result<()> {
        self.violations().into_iter().next().map_or(Ok(()), Err)
    }

    /// Every violated invariant.
    pub fn violations(&self) -> Vec<Error> {
        let mut out = Vec::new();
        if let Err(e) = self.scheme_params(self.scheme, self.reference_n.max(1)).validate() {
            out.push(e);
        }
        if let Err(e) = self.noise.build(self.grid) {
            out.push(e);
        }
        if self.mc_samples == 0 {
            out.push(invalid("mc_samples", "must be >= 1".to_string()));
        }
        if self.ladder.is_empty() {
            out.push(invalid("ladder", "must not be empty".to_string()));
        }
        if self.reference_n == 0 {
            out.push(invalid("reference_n", "must be >= 1".to_string()));
            return out;
        }
        for &n in &self.ladder {
            if n == 0 || self.reference_n % n != 0 {
                out.push(Error::NotDivisible {
                    what: "ladder entry into reference_n",
                    numerator: self.reference_n,
                    denominator: n,
                });
            }
        }
        if let Some(&max) = self.ladder.iter().max() {
            if self.reference_n < 8 * max && !(self.ladder.len() == 1 && max == self.reference_n) {
                out.push(invalid(
                    "reference_n",
                    format!("must be >= 8 * max(ladder) = {}, got {}", 8 * max, self.reference_n),
                ));
            }
        }
        if self.reference_n > crate::noise::MAX_FINE_STEPS {
            out.push(invalid(
                "reference_n",
                format!("must be <= {}, got {}", crate::noise::MAX_FINE_STEPS, self.reference_n),
            ));
        }
        out
    }
}

/// Monte Carlo estimates at one ladder entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub dt: f64,
    pub samples_used: usize,
    /// Estimate of `E max_k |u_ref(t_k) - u_N(t_k)|^2`.
    pub est_max_l2_sq: f64,
    pub se_max: f64,
    /// Estimate of `E (T/N) sum_k |grad e_k|^2`.
    pub est_v_sum: f64,
    pub se_v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub metric: &'static str,
    pub fit: RateFit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub scheme: SchemeKind,
    pub rows: Vec<ErrorRow>,
    /// Fits of the root-mean-square errors, `sqrt(est)`, against `N`.
    pub fits: Vec<RateRow>,
    /// Excluded `(sample, N)` pairs with the failure message.
    pub excluded: Vec<(usize, usize, String)>,
    /// Mean and standard error of `max_k |u_ref - u_split|^2` when the
    /// splitting cross-check ran.
    pub reference_gap: Option<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl ErrorReport {
    pub fn row(&self, n: usize) -> Option<&ErrorRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn fit(&self, metric: &str) -> Option<&RateFit> {
        self.fits.iter().find(|r| r.metric == metric).map(|r| &r.fit)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reference states at every multiple of `stride`.
struct Reference {
    stride: usize,
    states: Vec<SpectralField>,
}

impl Reference {
    fn compute(
        u0: &SpectralField,
        params: &SchemeParams,
        noise: &NoiseModel,
        path: &WienerPath,
        stride: usize,
    ) -> Result<Self> {
        let mut states = vec![u0.clone()];
        integrate(u0, params, noise, path, |k, u, _| {
            if k % stride == 0 {
                states.push(u.clone());
            }
        })?;
        Ok(Self { stride, states })
    }

    fn at(&self, fine_k: usize) -> &SpectralField {
        &self.states[fine_k / self.stride]
    }

    /// `max_k |ref - other|^2` over the common grid.
    fn gap(&self, other: &Reference) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).l2_sq())
            .fold(0.0, f64::max)
    }
}

/// `(max_k |e_k|^2, (T/N) sum_{k=1}^N |grad e_k|^2)` for a run of `params`
/// against the reference.
fn coarse_errors(
    reference: &Reference,
    reference_n: usize,
    u0: &SpectralField,
    params: &SchemeParams,
    noise: &NoiseModel,
    path: &WienerPath,
) -> Result<(f64, f64)> {
    let ratio = reference_n / params.n_steps;
    let mut max_sq = 0.0f64;
    let mut grad_terms = Vec::with_capacity(params.n_steps);
    integrate(u0, params, noise, path, |k, u, _| {
        let e = reference.at(k * ratio) - u;
        max_sq = max_sq.max(e.l2_sq());
        grad_terms.push(crate::spectral::sobolev_sq(&e).1);
    })?;
    let v_sum = super::stats::compensated_sum(grad_terms) * params.dt();
    Ok((max_sq, v_sum))
}

fn is_step_failure(e: &Error) -> bool {
    matches!(e, Error::StepFailed { .. } | Error::NonConvergence { .. })
}

struct SampleOutcome {
    per_n: Vec<std::result::Result<(f64, f64), String>>,
    gap: Option<f64>,
}

fn run_sample(cfg: &StudyConfig, noise: &NoiseModel, u0: &SpectralField, i: usize) -> Result<SampleOutcome> {
    let path = sample_wiener_path(noise, cfg.horizon, cfg.reference_n, cfg.sample_seed(i))?;
    let stride = cfg
        .ladder
        .iter()
        .fold(0, |g, &n| gcd(g, cfg.reference_n / n));
    let ref_params = cfg.scheme_params(cfg.scheme, cfg.reference_n);
    let reference = match Reference::compute(u0, &ref_params, noise, &path, stride) {
        Ok(r) => r,
        Err(e) if is_step_failure(&e) => {
            let msg = format!("reference: {e}");
            return Ok(SampleOutcome {
                per_n: cfg.ladder.iter().map(|_| Err(msg.clone())).collect(),
                gap: None,
            });
        }
        Err(e) => return Err(e),
    };
    let gap = if cfg.reference_cross_check && cfg.scheme != SchemeKind::Splitting {
        let sp = cfg.scheme_params(SchemeKind::Splitting, cfg.reference_n);
        match Reference::compute(u0, &sp, noise, &path, stride) {
            Ok(r) => Some(reference.gap(&r)),
            Err(e) if is_step_failure(&e) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let mut per_n = Vec::with_capacity(cfg.ladder.len());
    for &n in &cfg.ladder {
        let params = cfg.scheme_params(cfg.scheme, n);
        per_n.push(match coarse_errors(&reference, cfg.reference_n, u0, &params, noise, &path) {
            Ok(v) => Ok(v),
            Err(e) if is_step_failure(&e) => Err(e.to_string()),
            Err(e) => return Err(e),
        });
    }
    Ok(SampleOutcome { per_n, gap })
}

/// Strong-error study of `config.scheme` against its own solution at
/// `reference_n`, one shared fine path per sample.
///
/// Samples run on the rayon pool and are reduced in sample order, so the
/// report does not depend on the number of workers.
pub fn strong_error_study(config: &StudyConfig) -> Result<ErrorReport> {
    config.validate()?;
    let noise = config.noise.build(config.grid)?;
    let u0 = config.initial.build(config.grid);
    let outcomes: Vec<SampleOutcome> = (0..config.mc_samples)
        .into_par_iter()
        .map(|i| run_sample(config, &noise, &u0, i))
        .collect::<Result<_>>()?;

    let mut excluded = Vec::new();
    let mut rows = Vec::with_capacity(config.ladder.len());
    for (j, &n) in config.ladder.iter().enumerate() {
        let mut maxes = Vec::with_capacity(outcomes.len());
        let mut vsums = Vec::with_capacity(outcomes.len());
        for (i, o) in outcomes.iter().enumerate() {
            match &o.per_n[j] {
                Ok((m, v)) => {
                    maxes.push(*m);
                    vsums.push(*v);
                }
                Err(msg) => excluded.push((i, n, msg.clone())),
            }
        }
        let (est_max_l2_sq, se_max) = mean_and_se(&maxes);
        let (est_v_sum, se_v) = mean_and_se(&vsums);
        rows.push(ErrorRow {
            n,
            dt: config.horizon / n as f64,
            samples_used: maxes.len(),
            est_max_l2_sq,
            se_max,
            est_v_sum,
            se_v,
        });
    }
    let total = config.mc_samples * config.ladder.len();
    if excluded.len() * 20 > total {
        return Err(Error::StudyFailed(format!(
            "{} of {} (sample, N) pairs excluded after solver failures",
            excluded.len(),
            total
        )));
    }

    let mut warnings = Vec::new();
    let mut sorted: Vec<&ErrorRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.n);
    for w in sorted.windows(2) {
        let slack = 2.0 * (w[0].se_max.powi(2) + w[1].se_max.powi(2)).sqrt();
        if w[1].est_max_l2_sq > w[0].est_max_l2_sq + slack {
            warnings.push(format!(
                "est_max_l2_sq increases from N={} ({:.3e}) to N={} ({:.3e}) beyond two standard errors",
                w[0].n, w[0].est_max_l2_sq, w[1].n, w[1].est_max_l2_sq
            ));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let mut fits = Vec::new();
    for (metric, pick) in [
        ("max_l2", (|r: &ErrorRow| r.est_max_l2_sq) as fn(&ErrorRow) -> f64),
        ("v_sum", |r: &ErrorRow| r.est_v_sum),
    ] {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, pick(r).sqrt())).collect();
        match fit_rate(&pts) {
            Ok(fit) => fits.push(RateRow { metric, fit }),
            Err(e) => warnings.push(format!("no {metric} fit: {e}")),
        }
    }

    let gaps: Vec<f64> = outcomes.iter().filter_map(|o| o.gap).collect();
    let reference_gap = (!gaps.is_empty()).then(|| mean_and_se(&gaps));

    Ok(ErrorReport {
        scheme: config.scheme,
        rows,
        fits,
        excluded,
        reference_gap,
        warnings,
    })
}

/// Per-sample comparison of two schemes at `n` steps on one shared path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossSample {
    pub seed: u64,
    /// `max_k |u_ref - u_a|^2` on the `n`-grid.
    pub err_a: f64,
    pub err_b: f64,
    /// `max_k |u_a - u_b|^2`.
    pub diff: f64,
}

/// Runs schemes `a` and `b` at `n` steps and `config.scheme` at
/// `reference_n` on the same fine path for every sample.
pub fn cross_scheme_study(config: &StudyConfig, a: SchemeKind, b: SchemeKind, n: usize) -> Result<Vec<CrossSample>> {
    let cfg = StudyConfig {
        ladder: vec![n],
        ..config.clone()
    };
    cfg.validate()?;
    let noise = cfg.noise.build(cfg.grid)?;
    let u0 = cfg.initial.build(cfg.grid);
    let ratio = cfg.reference_n / n;
    (0..cfg.mc_samples)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.sample_seed(i);
            let path = sample_wiener_path(&noise, cfg.horizon, cfg.reference_n, seed)?;
            let reference =
                Reference::compute(&u0, &cfg.scheme_params(cfg.scheme, cfg.reference_n), &noise, &path, ratio)?;
            let ra = Reference::compute(&u0, &cfg.scheme_params(a, n), &noise, &path, 1)?;
            let rb = Reference::compute(&u0, &cfg.scheme_params(b, n), &noise, &path, 1)?;
            Ok(CrossSample {
                seed,
                err_a: reference.gap(&ra),
                err_b: reference.gap(&rb),
                diff: ra.gap(&rb),
            })
        })
        .collect()
}

/// Full trajectories of `config.scheme` at `n` steps, one per sample,
/// driven by the sample paths at `reference_n`.
pub fn run_ensemble(config: &StudyConfig, n: usize) -> Result<Vec<TrajectoryRecord>> {
    let cfg = StudyConfig {
        ladder: vec![n],
        ..config.clone()
    };
    cfg.validate()?;
    let noise = cfg.noise.build(cfg.grid)?;
    let u0 = cfg.initial.build(cfg.grid);
    let params = cfg.scheme_params(cfg.scheme, n);
    (0..cfg.mc_samples)
        .into_par_iter()
        .map(|i| {
            let path = sample_wiener_path(&noise, cfg.horizon, cfg.reference_n, cfg.sample_seed(i))?;
            run_trajectory(&u0, &params, &noise, &path)
        })
        .collect()
}

fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

/// `errors.csv`: `scheme,N,dt,mc_samples,est_max_l2_sq,se_max,est_v_sum,se_v`.
pub fn write_errors_csv<W: Write>(report: &ErrorReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scheme", "N", "dt", "mc_samples", "est_max_l2_sq", "se_max", "est_v_sum", "se_v"])?;
    for r in &report.rows {
        out.write_record([
            report.scheme.as_str().to_string(),
            r.n.to_string(),
            fmt_f(r.dt),
            r.samples_used.to_string(),
            fmt_f(r.est_max_l2_sq),
            fmt_f(r.se_max),
            fmt_f(r.est_v_sum),
            fmt_f(r.se_v),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `rates.csv`: `scheme,metric,fitted_order,half_width`.
pub fn write_rates_csv<W: Write>(report: &ErrorReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scheme", "metric", "fitted_order", "half_width"])?;
    for r in &report.fits {
        out.write_record([
            report.scheme.as_str().to_string(),
            r.metric.to_string(),
            fmt_f(r.fit.order),
            fmt_f(r.fit.half_width),
        ])?;
    }
    out.flush()?;
    Ok(())
}
