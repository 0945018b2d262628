//! Command execution, output staging and the run manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use sns_core::harness::{moment_report, run_ensemble, strong_error_study, write_errors_csv, write_moments_csv, write_rates_csv};
use sns_core::noise::sample_wiener_path;
use sns_core::schemes::run_trajectory;
use sns_core::spectral::{norm_bundle, write_snapshot};
use sns_core::theory::{alpha0, constants_table, estimate_gn_constant, poincare_constant, write_constants_csv, AnalysisParams};
use sns_core::{Error, VERSION};
use toml::{Table, Value};

use crate::config::{Command, RunConfig};
use crate::plot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } | Error::StepFailed { .. } | Error::StudyFailed(_) => EXIT_SOLVER,
        Error::Io(_) | Error::Csv(_) | Error::Format(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

pub fn error_kind(code: i32) -> &'static str {
    match code {
        EXIT_SOLVER => "solver",
        EXIT_IO => "io",
        _ => "config",
    }
}

/// Files written by a successful run, relative to the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

const STAGING: &str = ".partial";
const FAILED: &str = "failed";
pub const MANIFEST: &str = "manifest.toml";

/// Analysis inputs with run-time defaults resolved, plus which of them were
/// estimated rather than given.
pub fn resolve_analysis(cfg: &RunConfig) -> Result<(AnalysisParams, Vec<&'static str>), Error> {
    let a = &cfg.analysis;
    let mut p = a.params.clone();
    let mut estimated = Vec::new();
    match &cfg.study {
        Some(study) => {
            let noise = study.noise.build(study.grid)?;
            p.k0 = a.k0.unwrap_or_else(|| noise.k0_v());
            p.k1 = a.k1.unwrap_or_else(|| noise.k1());
            p.l1 = a.l1.unwrap_or_else(|| noise.l1());
            p.c_tilde = a.c_tilde.unwrap_or_else(|| {
                estimated.push("c_tilde");
                poincare_constant(&study.grid)
            });
            p.c_bar = a.c_bar.unwrap_or_else(|| {
                estimated.push("c_bar");
                estimate_gn_constant(&study.grid, a.gn_samples, a.gn_seed)
            });
        }
        None => {
            p.k0 = a.k0.expect("validated");
            p.k1 = a.k1.unwrap_or(0.0);
            p.l1 = a.l1.unwrap_or(0.0);
            p.c_bar = a.c_bar.expect("validated");
            p.c_tilde = a.c_tilde.expect("validated");
        }
    }
    p.validate()?;
    Ok((p, estimated))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Error> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Runs one command, writing into `dir`. Returns the written file names and
/// any warnings.
fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunOutcome, Error> {
    let mut files = Vec::new();
    let mut warnings = Vec::new();
    match cfg.command {
        Command::Constants => {
            let (params, estimated) = resolve_analysis(cfg)?;
            for name in estimated {
                warnings.push(format!("{name} is an estimate, not a proven constant"));
            }
            let rows = constants_table(&params, cfg.analysis.n_eval)?;
            write_constants_csv(&rows, create(dir, "constants.csv")?)?;
            files.push("constants.csv".to_string());
        }
        Command::Convergence => {
            let study = cfg.study.as_ref().expect("validated");
            let report = strong_error_study(study)?;
            write_errors_csv(&report, create(dir, "errors.csv")?)?;
            write_rates_csv(&report, create(dir, "rates.csv")?)?;
            files.push("errors.csv".into());
            files.push("rates.csv".into());
            warnings.extend(report.warnings.iter().cloned());
            for (sample, n, msg) in &report.excluded {
                warnings.push(format!("excluded sample {sample} at N={n}: {msg}"));
            }
            if let Some((gap, se)) = report.reference_gap {
                warnings.push(format!(
                    "splitting cross-check: mean max_k |u_ref - u_split|^2 = {gap:.6e} (se {se:.2e})"
                ));
            }
        }
        Command::Diagnostics => {
            let study = cfg.study.as_ref().expect("validated");
            let n = cfg.n_steps.expect("validated");
            let records = run_ensemble(study, n)?;
            let noise = study.noise.build(study.grid)?;
            let k0 = cfg.analysis.k0.unwrap_or_else(|| noise.k0_v());
            let c_tilde = cfg.analysis.c_tilde.unwrap_or_else(|| poincare_constant(&study.grid));
            let a0 = alpha0(cfg.viscosity, k0, c_tilde);
            let alphas: Vec<f64> = if a0.is_finite() {
                cfg.moments.alpha_fractions.iter().map(|f| f * a0).collect()
            } else {
                warnings.push("alpha0 is infinite (K0 = 0); exponential moments skipped".into());
                Vec::new()
            };
            let rows = moment_report(&records, &cfg.moments.p_orders, &cfg.moments.m_ladder, &alphas)?;
            write_moments_csv(&rows, create(dir, "moments.csv")?)?;
            let mut out = csv_writer(dir, "diagnostics.csv")?;
            out.write_record([
                "sample",
                "seed",
                "max_solver_iterations",
                "max_residual",
                "max_energy_defect",
                "max_v_sq",
            ])
            ?;
            for (i, r) in records.iter().enumerate() {
                let max_it = r.diagnostics.iter().map(|d| d.solver_iterations).max().unwrap_or(0);
                let max_res = r.diagnostics.iter().map(|d| d.residual).fold(0.0, f64::max);
                let max_def = r.diagnostics.iter().map(|d| d.energy_defect).fold(0.0, f64::max);
                let max_v = r.states.iter().map(|u| norm_bundle(u).v.powi(2)).fold(0.0, f64::max);
                out.write_record([
                    i.to_string(),
                    r.path_seed.to_string(),
                    max_it.to_string(),
                    format!("{max_res:.17e}"),
                    format!("{max_def:.17e}"),
                    format!("{max_v:.17e}"),
                ])
                ?;
            }
            out.flush()?;
            files.push("moments.csv".into());
            files.push("diagnostics.csv".into());
        }
        Command::SingleRun => {
            let study = cfg.study.as_ref().expect("validated");
            let n = cfg.n_steps.expect("validated");
            let noise = study.noise.build(study.grid)?;
            let u0 = study.initial.build(study.grid);
            let path = sample_wiener_path(&noise, study.horizon, study.reference_n, cfg.path_seed)?;
            let params = study.scheme_params(study.scheme, n);
            let record = run_trajectory(&u0, &params, &noise, &path)?;
            record.write_csv(create(dir, "trajectory.csv")?)?;
            write_snapshot(record.states.last().expect("non-empty"), create(dir, "final_state.sns")?)?;
            files.push("trajectory.csv".into());
            files.push("final_state.sns".into());
        }
    }
    let script = plot::script(cfg.command);
    fs::write(dir.join(plot::SCRIPT_NAME), script)?;
    files.push(plot::SCRIPT_NAME.into());
    Ok(RunOutcome { files, warnings })
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<File>, Error> {
    Ok(csv::Writer::from_path(dir.join(name))?)
}

fn sha256_file(path: &Path) -> Result<(String, u64), Error> {
    let bytes = fs::read(path)?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

fn float_list(xs: &[f64]) -> Value {
    Value::Array(
        xs.iter()
            .map(|x| {
                if x.is_finite() {
                    Value::Float(*x)
                } else {
                    Value::String(x.to_string())
                }
            })
            .collect(),
    )
}

/// Resolved configuration echoed into the manifest.
pub fn config_table(cfg: &RunConfig) -> Table {
    let mut t = Table::new();
    t.insert("command".into(), cfg.command.as_str().into());
    t.insert("viscosity".into(), cfg.viscosity.into());
    t.insert("horizon".into(), cfg.horizon.into());
    if let Some(n) = cfg.n_steps {
        t.insert("n_steps".into(), (n as i64).into());
    }
    t.insert("path_seed".into(), Value::String(cfg.path_seed.to_string()));
    if let Some(s) = &cfg.study {
        let mut st = Table::new();
        st.insert("n_modes".into(), (s.grid.n_modes() as i64).into());
        st.insert("box_length".into(), s.grid.box_length().into());
        st.insert("dealias_cutoff".into(), (s.grid.dealias_cutoff() as i64).into());
        st.insert("noise".into(), format!("{:?}", s.noise).into());
        st.insert("initial".into(), s.initial.to_string().into());
        st.insert("scheme".into(), s.scheme.as_str().into());
        st.insert("solver_tol".into(), s.solver_tol.into());
        st.insert("solver_max_iter".into(), (s.solver_max_iter as i64).into());
        st.insert("inner_substeps".into(), (s.inner_substeps as i64).into());
        st.insert(
            "ladder".into(),
            Value::Array(s.ladder.iter().map(|&n| Value::Integer(n as i64)).collect()),
        );
        st.insert("reference_n".into(), (s.reference_n as i64).into());
        st.insert("mc_samples".into(), (s.mc_samples as i64).into());
        // Seeds are u64 and may exceed the TOML integer range.
        st.insert("base_seed".into(), Value::String(s.base_seed.to_string()));
        st.insert("reference_cross_check".into(), s.reference_cross_check.into());
        t.insert("study".into(), Value::Table(st));
    }
    let a = &cfg.analysis;
    let p = &a.params;
    let mut at = Table::new();
    for (k, v) in [
        ("q_moment", p.q_moment),
        ("beta", p.beta),
        ("eps_bar", p.eps_bar),
        ("epsilon", p.epsilon),
        ("eta", p.eta),
        ("holder_p", p.holder_p),
        ("splitting_offset", p.splitting_offset),
        ("euler_offset", p.euler_offset),
        ("n_eval", a.n_eval),
    ] {
        at.insert(k.into(), v.into());
    }
    for (k, v) in [("k0", a.k0), ("k1", a.k1), ("l1", a.l1), ("c_bar", a.c_bar), ("c_tilde", a.c_tilde)] {
        at.insert(
            k.into(),
            v.map_or_else(|| Value::String("derived".into()), Value::Float),
        );
    }
    at.insert("gn_samples".into(), (a.gn_samples as i64).into());
    at.insert("gn_seed".into(), Value::String(a.gn_seed.to_string()));
    t.insert("analysis".into(), Value::Table(at));
    let mut mt = Table::new();
    mt.insert("p_orders".into(), float_list(&cfg.moments.p_orders));
    mt.insert("m_ladder".into(), float_list(&cfg.moments.m_ladder));
    mt.insert("alpha_fractions".into(), float_list(&cfg.moments.alpha_fractions));
    t.insert("moments".into(), Value::Table(mt));
    t
}

fn write_manifest(cfg: &RunConfig, out: &Path, outcome: &RunOutcome) -> Result<(), Error> {
    let mut m = Table::new();
    m.insert("version".into(), VERSION.into());
    m.insert("command".into(), cfg.command.as_str().into());
    m.insert("timestamp".into(), chrono::Utc::now().to_rfc3339().into());
    let seeds: Vec<Value> = match (&cfg.command, &cfg.study) {
        (Command::SingleRun, _) => vec![Value::String(cfg.path_seed.to_string())],
        (Command::Convergence | Command::Diagnostics, Some(s)) => {
            (0..s.mc_samples).map(|i| Value::String(s.sample_seed(i).to_string())).collect()
        }
        _ => Vec::new(),
    };
    m.insert("seeds".into(), Value::Array(seeds));
    m.insert("config".into(), Value::Table(config_table(cfg)));
    m.insert(
        "warnings".into(),
        Value::Array(outcome.warnings.iter().map(|w| Value::String(w.clone())).collect()),
    );
    let mut files = Vec::new();
    for name in &outcome.files {
        let (digest, bytes) = sha256_file(&out.join(name))?;
        let mut f = Table::new();
        f.insert("path".into(), name.as_str().into());
        f.insert("sha256".into(), digest.into());
        f.insert("bytes".into(), (bytes as i64).into());
        files.push(Value::Table(f));
    }
    m.insert("files".into(), Value::Array(files));
    let text = toml::to_string(&m).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(out.join(MANIFEST), text)?;
    Ok(())
}

/// Machine-readable failure record.
pub fn error_record(command: Option<Command>, code: i32, messages: &[String]) -> String {
    let v = serde_json::json!({
        "status": "failed",
        "command": command.map(|c| c.as_str()),
        "exit_code": code,
        "kind": error_kind(code),
        "errors": messages,
        "version": VERSION,
    });
    serde_json::to_string_pretty(&v).expect("plain JSON value") + "\n"
}

/// Writes a failure record to `<out>/failed/error.json`.
pub fn write_failure(out: &Path, command: Option<Command>, code: i32, messages: &[String]) -> std::io::Result<PathBuf> {
    let dir = out.join(FAILED);
    fs::create_dir_all(&dir)?;
    let path = dir.join("error.json");
    fs::write(&path, error_record(command, code, messages))?;
    Ok(path)
}

/// Runs `cfg` into `out`. Outputs are staged and only moved into `out`
/// when the command succeeds; on failure the staged files end up in
/// `out/failed/` next to `error.json`.
pub fn run_experiment(cfg: &RunConfig, out: &Path) -> Result<RunOutcome, (i32, Error)> {
    let io = |e: std::io::Error| (EXIT_IO, Error::Io(e));
    fs::create_dir_all(out).map_err(io)?;
    let staging = out.join(STAGING);
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io)?;
    }
    fs::create_dir_all(&staging).map_err(io)?;
    match execute(cfg, &staging) {
        Ok(outcome) => {
            for name in &outcome.files {
                fs::rename(staging.join(name), out.join(name)).map_err(io)?;
            }
            fs::remove_dir_all(&staging).map_err(io)?;
            write_manifest(cfg, out, &outcome).map_err(|e| (exit_code(&e), e))?;
            Ok(outcome)
        }
        Err(e) => {
            let code = exit_code(&e);
            let failed = out.join(FAILED);
            if failed.exists() {
                fs::remove_dir_all(&failed).map_err(io)?;
            }
            fs::rename(&staging, &failed).map_err(io)?;
            write_failure(out, Some(cfg.command), code, &[e.to_string()]).map_err(io)?;
            Err((code, e))
        }
    }
}
