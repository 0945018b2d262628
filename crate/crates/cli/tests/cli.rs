use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn sns(config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = out.with_extension("toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sns"))
        .arg("--config")
        .arg(&cfg)
        .arg("--output")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn csv_value(path: &Path, name: &str) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let line = text
        .lines()
        .find(|l| l.split(',').next() == Some(name))
        .unwrap_or_else(|| panic!("{name} not in {text}"));
    line.split(',').nth(1).unwrap().parse().unwrap()
}

const CONSTANTS: &str = r#"
command = "constants"
[physics]
viscosity = 1.0
horizon = 1.0
[analysis]
k0 = 1.0
c_bar = 1.0
c_tilde = 1.0
"#;

const SINGLE_SILENT: &str = r#"
command = "single_run"
[grid]
n_modes = 8
[physics]
viscosity = 0.5
horizon = 1.0
[noise]
kind = "additive"
amplitude = 0.0
[initial]
kind = "zero"
[scheme]
kind = "fully_implicit"
n_steps = 16
[study]
reference_n = 64
ladder = [8]
"#;

const SMALL_STUDY: &str = r#"
command = "convergence"
[grid]
n_modes = 8
[physics]
viscosity = 1.0
horizon = 0.25
[noise]
kind = "additive"
amplitude = 1.0
exponent = 3.0
[initial]
kind = "random_smooth"
decay = 2.0
seed = 3
[scheme]
kind = "semi_implicit"
[study]
ladder = [2, 4, 8]
reference_n = 64
mc_samples = 6
base_seed = 11
"#;

#[test]
fn constants_command_reports_one_sixth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = sns(CONSTANTS, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g = csv_value(&out.join("constants.csv"), "euler.gamma_sup");
    assert!((g - 1.0 / 6.0).abs() < 1e-12);
    assert_eq!(csv_value(&out.join("constants.csv"), "alpha0"), 0.25);
    assert!(out.join("plot.gp").exists());
}

#[test]
fn silent_single_run_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = sns(SINGLE_SILENT, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 17);
    for r in rows {
        for v in r.split(',').skip(2).take(3) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{r}");
        }
    }
}

#[test]
fn reruns_are_byte_identical_and_checksummed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = sns(SMALL_STUDY, out, &["--workers", "2"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["errors.csv", "rates.csv", "plot.gp"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let manifest: toml::Table = fs::read_to_string(a.join("manifest.toml")).unwrap().parse().unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let f = f.as_table().unwrap();
        let bytes = fs::read(a.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 6);
    assert!(manifest["version"].as_str().is_some());
    let errors = fs::read_to_string(a.join("errors.csv")).unwrap();
    assert!(errors.starts_with("scheme,N,dt,mc_samples,est_max_l2_sq,se_max,est_v_sum,se_v"));
    assert_eq!(errors.lines().count(), 4);
}

#[test]
fn seed_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(sns(SMALL_STUDY, &a, &[]).status.success());
    assert!(sns(SMALL_STUDY, &b, &["--seed-override", "99"]).status.success());
    assert_ne!(fs::read(a.join("errors.csv")).unwrap(), fs::read(b.join("errors.csv")).unwrap());
}

#[test]
fn config_errors_exit_2_with_every_issue() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    let text = SMALL_STUDY.replace("ladder = [2, 4, 8]", "ladder = [3, 4, 8]").replace("[physics]", "[physics]\nbeta = 2");
    let o = sns(&text, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("study.ladder"), "{err}");
    assert!(err.contains("physics.beta"), "{err}");
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("failed/error.json")).unwrap()).unwrap();
    assert_eq!(record["exit_code"], 2);
    assert_eq!(record["errors"].as_array().unwrap().len(), 2);
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dry");
    let o = sns(SMALL_STUDY, &out, &["--dry-run"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!out.exists());
}

#[test]
fn solver_failure_exits_3_and_stages_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fail");
    let text = SINGLE_SILENT
        .replace("amplitude = 0.0", "amplitude = 1.0")
        .replace("kind = \"zero\"", "kind = \"taylor_green\"\namplitude = 2.0")
        .replace("n_steps = 16", "n_steps = 16\nsolver_max_iter = 1\nsolver_tol = 1e-300");
    let o = sns(&text, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("trajectory.csv").exists());
    assert!(!out.join("manifest.toml").exists());
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("failed/error.json")).unwrap()).unwrap();
    assert_eq!(record["kind"], "solver");
}

#[test]
fn diagnostics_writes_moments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let text = SMALL_STUDY
        .replace("command = \"convergence\"", "command = \"diagnostics\"")
        .replace("kind = \"semi_implicit\"", "kind = \"fully_implicit\"\nn_steps = 8");
    let o = sns(&text, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let moments = fs::read_to_string(out.join("moments.csv")).unwrap();
    assert!(moments.starts_with("p_or_alpha_or_M,statistic,value,stability_flag"));
    assert!(moments.lines().any(|l| l.starts_with("inf,complement_probability,0")));
    assert_eq!(fs::read_to_string(out.join("diagnostics.csv")).unwrap().lines().count(), 7);
}
