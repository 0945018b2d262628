//! TOML run configuration.
//!
//! Parsing walks the document by hand so that every problem (unknown keys,
//! wrong types, out-of-range values, ladder divisibility) is reported in one
//! pass instead of stopping at the first.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use sns_core::harness::{InitialCondition, NoiseSpec, StudyConfig};
use sns_core::schemes::{DEFAULT_INNER_SUBSTEPS, DEFAULT_SOLVER_MAX_ITER, DEFAULT_SOLVER_TOL};
use sns_core::theory::AnalysisParams;
use sns_core::{Grid, Modulation, NoiseKind, SchemeKind};
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Convergence,
    Constants,
    Diagnostics,
    SingleRun,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Convergence => "convergence",
            Command::Constants => "constants",
            Command::Diagnostics => "diagnostics",
            Command::SingleRun => "single_run",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "convergence" => Ok(Command::Convergence),
            "constants" => Ok(Command::Constants),
            "diagnostics" => Ok(Command::Diagnostics),
            "single_run" => Ok(Command::SingleRun),
            other => Err(format!(
                "unknown command {other:?} (expected convergence, constants, diagnostics or single_run)"
            )),
        }
    }
}

/// One configuration problem, located by dotted key path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Analysis inputs; `None` entries are derived from the grid and noise model
/// at run time.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisSettings {
    /// Fully specified except for the fields flagged below.
    pub params: AnalysisParams,
    pub k0: Option<f64>,
    pub k1: Option<f64>,
    pub l1: Option<f64>,
    pub c_bar: Option<f64>,
    pub c_tilde: Option<f64>,
    /// `N` at which thresholds are tabulated.
    pub n_eval: f64,
    pub gn_samples: usize,
    pub gn_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSettings {
    pub p_orders: Vec<f64>,
    pub m_ladder: Vec<f64>,
    /// Exponential-moment exponents as multiples of `alpha0`.
    pub alpha_fractions: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub output_dir: Option<PathBuf>,
    pub viscosity: f64,
    pub horizon: f64,
    /// Absent only for `constants` runs that give every analysis input.
    pub study: Option<StudyConfig>,
    /// Steps of `single_run` and `diagnostics`.
    pub n_steps: Option<usize>,
    /// Path seed of `single_run`.
    pub path_seed: u64,
    pub analysis: AnalysisSettings,
    pub moments: MomentSettings,
}

impl RunConfig {
    /// Replaces every seed drawn from the config with `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.path_seed = seed;
        if let Some(s) = &mut self.study {
            s.base_seed = seed;
        }
    }
}

/// Key-tracking view of one table.
struct Section<'a> {
    prefix: String,
    table: Option<&'a Table>,
    used: BTreeSet<&'static str>,
}

struct Walker {
    issues: Vec<ConfigIssue>,
}

impl Walker {
    fn issue(&mut self, key: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            key: key.into(),
            message: message.into(),
        });
    }

    fn section<'a>(&mut self, root: &'a Table, name: &str) -> Section<'a> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(other) => {
                self.issue(name, format!("expected a table, got {}", other.type_str()));
                None
            }
        };
        Section {
            prefix: name.to_string(),
            table,
            used: BTreeSet::new(),
        }
    }

    fn finish(&mut self, s: Section<'_>) {
        if let Some(t) = s.table {
            for k in t.keys() {
                if !s.used.contains(k.as_str()) {
                    self.issue(format!("{}.{k}", s.prefix), "unknown key");
                }
            }
        }
    }

    fn raw<'a>(&mut self, s: &mut Section<'a>, key: &'static str) -> Option<&'a Value> {
        s.used.insert(key);
        s.table.and_then(|t| t.get(key))
    }

    fn f64(&mut self, s: &mut Section<'_>, key: &'static str) -> Option<f64> {
        let path = format!("{}.{key}", s.prefix);
        match self.raw(s, key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.issue(path, format!("expected a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn u64(&mut self, s: &mut Section<'_>, key: &'static str) -> Option<u64> {
        let path = format!("{}.{key}", s.prefix);
        match self.raw(s, key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                self.issue(path, format!("must be a non-negative integer, got {i}"));
                None
            }
            other => {
                self.issue(path, format!("expected an integer, got {}", other.type_str()));
                None
            }
        }
    }

    fn usize(&mut self, s: &mut Section<'_>, key: &'static str) -> Option<usize> {
        self.u64(s, key).map(|v| v as usize)
    }

    fn bool(&mut self, s: &mut Section<'_>, key: &'static str) -> Option<bool> {
        let path = format!("{}.{key}", s.prefix);
        match self.raw(s, key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.issue(path, format!("expected a boolean, got {}", other.type_str()));
                None
            }
        }
    }

    fn string<'a>(&mut self, s: &mut Section<'a>, key: &'static str) -> Option<&'a str> {
        let path = format!("{}.{key}", s.prefix);
        match self.raw(s, key)? {
            Value::String(v) => Some(v.as_str()),
            other => {
                self.issue(path, format!("expected a string, got {}", other.type_str()));
                None
            }
        }
    }

    fn list<T>(
        &mut self,
        s: &mut Section<'_>,
        key: &'static str,
        item: impl Fn(&Value) -> Option<T>,
        what: &str,
    ) -> Option<Vec<T>> {
        let path = format!("{}.{key}", s.prefix);
        match self.raw(s, key)? {
            Value::Array(a) => {
                let mut out = Vec::with_capacity(a.len());
                for (i, v) in a.iter().enumerate() {
                    match item(v) {
                        Some(x) => out.push(x),
                        None => self.issue(format!("{path}[{i}]"), format!("expected {what}, got {}", v.type_str())),
                    }
                }
                Some(out)
            }
            other => {
                self.issue(path, format!("expected an array, got {}", other.type_str()));
                None
            }
        }
    }

    fn require<T>(&mut self, v: Option<T>, key: &str) -> Option<T> {
        if v.is_none() && !self.issues.iter().any(|i| i.key == key) {
            self.issue(key, "required");
        }
        v
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        Value::String(s) if s == "inf" => Some(f64::INFINITY),
        _ => None,
    }
}

fn as_usize(v: &Value) -> Option<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Some(*i as usize),
        _ => None,
    }
}

fn core_issue(section: &str, e: sns_core::Error) -> ConfigIssue {
    match e {
        sns_core::Error::InvalidParameter { name, reason } => ConfigIssue {
            key: format!("{section}.{name}"),
            message: reason,
        },
        other => ConfigIssue {
            key: section.to_string(),
            message: other.to_string(),
        },
    }
}

/// Parses and validates a configuration document.
pub fn validate_config(text: &str) -> Result<RunConfig, Vec<ConfigIssue>> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        vec![ConfigIssue {
            key: "<document>".into(),
            message: e.to_string().trim().to_string(),
        }]
    })?;
    let mut w = Walker { issues: Vec::new() };

    const SECTIONS: [&str; 8] = ["grid", "physics", "noise", "initial", "scheme", "study", "analysis", "moments"];
    for k in root.keys() {
        if !SECTIONS.contains(&k.as_str()) && k != "command" && k != "output_dir" {
            w.issue(k.clone(), "unknown key");
        }
    }
    let command = match root.get("command") {
        Some(Value::String(s)) => match s.parse::<Command>() {
            Ok(c) => Some(c),
            Err(m) => {
                w.issue("command", m);
                None
            }
        },
        Some(other) => {
            w.issue("command", format!("expected a string, got {}", other.type_str()));
            None
        }
        None => {
            w.issue("command", "required");
            None
        }
    };
    let output_dir = match root.get("output_dir") {
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => {
            w.issue("output_dir", format!("expected a string, got {}", other.type_str()));
            None
        }
        None => None,
    };
    let needs_grid = command != Some(Command::Constants);

    // [physics]
    let mut s = w.section(&root, "physics");
    let viscosity = w.f64(&mut s, "viscosity");
    let viscosity = w.require(viscosity, "physics.viscosity");
    let horizon = w.f64(&mut s, "horizon");
    let horizon = w.require(horizon, "physics.horizon");
    w.finish(s);

    // [grid]
    let mut s = w.section(&root, "grid");
    let grid_present = s.table.is_some();
    let n_modes = w.usize(&mut s, "n_modes");
    let box_length = w.f64(&mut s, "box_length").unwrap_or(2.0 * std::f64::consts::PI);
    w.finish(s);
    let grid = if grid_present || needs_grid {
        w.require(n_modes, "grid.n_modes").and_then(|n| match Grid::new(n, box_length) {
            Ok(g) => Some(g),
            Err(e) => {
                w.issue("grid", e.to_string());
                None
            }
        })
    } else {
        None
    };

    // [noise]
    let mut s = w.section(&root, "noise");
    let noise_present = s.table.is_some();
    let kind_name = w.string(&mut s, "kind").unwrap_or("additive");
    let amplitude = w.f64(&mut s, "amplitude").unwrap_or(1.0);
    let exponent = w.f64(&mut s, "exponent").unwrap_or(3.0);
    let sigma = w.f64(&mut s, "sigma");
    let modulation = match w.raw(&mut s, "modulation") {
        None => Modulation::Sine,
        Some(Value::String(m)) if m == "sine" => Modulation::Sine,
        Some(v) => match as_f64(v) {
            Some(c) => Modulation::Constant(c),
            None => {
                w.issue("noise.modulation", "expected \"sine\" or a number");
                Modulation::Sine
            }
        },
    };
    w.finish(s);
    let noise_kind = match kind_name {
        "additive" => {
            if sigma.is_some() {
                w.issue("noise.sigma", "only used with kind = \"scalar_multiplicative\"");
            }
            Some(NoiseKind::Additive)
        }
        "scalar_multiplicative" => Some(NoiseKind::ScalarMultiplicative {
            sigma: sigma.unwrap_or(1.0),
            modulation,
        }),
        other => {
            w.issue(
                "noise.kind",
                format!("unknown kind {other:?} (expected additive or scalar_multiplicative)"),
            );
            None
        }
    };
    let noise = noise_kind.map(|kind| NoiseSpec {
        amplitude,
        exponent,
        kind,
    });
    if needs_grid && !noise_present {
        w.issue("noise", "required");
    }

    // [initial]
    let mut s = w.section(&root, "initial");
    let init_kind = w.string(&mut s, "kind").unwrap_or("zero");
    let init_amp = w.f64(&mut s, "amplitude");
    let decay = w.f64(&mut s, "decay");
    let init_seed = w.u64(&mut s, "seed");
    w.finish(s);
    let initial = match init_kind {
        "zero" => InitialCondition::Zero,
        "taylor_green" => InitialCondition::TaylorGreen {
            amplitude: init_amp.unwrap_or(1.0),
        },
        "random_smooth" => InitialCondition::RandomSmooth {
            decay: decay.unwrap_or(2.0),
            amplitude: init_amp.unwrap_or(1.0),
            seed: init_seed.unwrap_or(0),
        },
        other => {
            w.issue(
                "initial.kind",
                format!("unknown kind {other:?} (expected zero, taylor_green or random_smooth)"),
            );
            InitialCondition::Zero
        }
    };
    match initial {
        InitialCondition::TaylorGreen { amplitude } | InitialCondition::RandomSmooth { amplitude, .. }
            if !amplitude.is_finite() =>
        {
            w.issue("initial.amplitude", "must be finite")
        }
        InitialCondition::RandomSmooth { decay, .. } if !decay.is_finite() => w.issue("initial.decay", "must be finite"),
        _ => {}
    }

    // [scheme]
    let mut s = w.section(&root, "scheme");
    let scheme = match w.string(&mut s, "kind") {
        None => SchemeKind::FullyImplicit,
        Some(k) => k.parse::<SchemeKind>().unwrap_or_else(|e| {
            w.issue("scheme.kind", e.to_string());
            SchemeKind::FullyImplicit
        }),
    };
    let n_steps = w.usize(&mut s, "n_steps");
    let solver_tol = w.f64(&mut s, "solver_tol").unwrap_or(DEFAULT_SOLVER_TOL);
    let solver_max_iter = w.usize(&mut s, "solver_max_iter").unwrap_or(DEFAULT_SOLVER_MAX_ITER);
    let inner_substeps = w.usize(&mut s, "inner_substeps").unwrap_or(DEFAULT_INNER_SUBSTEPS);
    let path_seed = w.u64(&mut s, "seed").unwrap_or(0);
    w.finish(s);
    let n_steps = if matches!(command, Some(Command::SingleRun | Command::Diagnostics)) {
        w.require(n_steps, "scheme.n_steps")
    } else {
        n_steps
    };
    if n_steps == Some(0) {
        w.issue("scheme.n_steps", "must be >= 1");
    }

    // [study]
    let mut s = w.section(&root, "study");
    let ladder = w.list(&mut s, "ladder", as_usize, "a non-negative integer");
    let reference_n = w.usize(&mut s, "reference_n");
    let mc_samples = w.usize(&mut s, "mc_samples");
    let base_seed = w.u64(&mut s, "base_seed");
    let cross_check = w.bool(&mut s, "reference_cross_check");
    w.finish(s);

    let study = match (grid, noise, viscosity, horizon) {
        (Some(grid), Some(noise), Some(nu), Some(t)) => {
            let mut c = StudyConfig::new(grid, nu, t, noise, scheme);
            c.initial = initial;
            c.solver_tol = solver_tol;
            c.solver_max_iter = solver_max_iter;
            c.inner_substeps = inner_substeps;
            if let Some(l) = ladder {
                c.ladder = l;
            }
            if let Some(r) = reference_n {
                c.reference_n = r;
            }
            if let Some(m) = mc_samples {
                c.mc_samples = m;
            }
            if let Some(b) = base_seed {
                c.base_seed = b;
            }
            c.reference_cross_check = cross_check.unwrap_or(false);
            if let Some(n) = n_steps.filter(|&n| n > 0) {
                if command != Some(Command::Convergence) && c.reference_n % n != 0 {
                    // single_run and diagnostics sample their path at reference_n
                    w.issue(
                        "scheme.n_steps",
                        format!("must divide study.reference_n = {}", c.reference_n),
                    );
                }
            }
            for e in c.violations() {
                let issue = match e {
                    sns_core::Error::NotDivisible {
                        numerator, denominator, ..
                    } => ConfigIssue {
                        key: "study.ladder".into(),
                        message: format!("entry {denominator} does not divide reference_n = {numerator}"),
                    },
                    sns_core::Error::InvalidParameter { name, reason } => {
                        let section = match name {
                            "viscosity" | "horizon" => "physics",
                            "solver_tol" | "solver_max_iter" | "inner_substeps" | "n_steps" | "kind" => "scheme",
                            "amplitude" | "exponent" | "sigma" | "modulation" => "noise",
                            _ => "study",
                        };
                        ConfigIssue {
                            key: format!("{section}.{name}"),
                            message: reason,
                        }
                    }
                    other => ConfigIssue {
                        key: "study".into(),
                        message: other.to_string(),
                    },
                };
                w.issues.push(issue);
            }
            Some(c)
        }
        _ => None,
    };

    // [analysis]
    let mut s = w.section(&root, "analysis");
    let defaults = AnalysisParams::default();
    let mut params = AnalysisParams {
        viscosity: viscosity.unwrap_or(defaults.viscosity),
        horizon: horizon.unwrap_or(defaults.horizon),
        ..defaults
    };
    let k0 = w.f64(&mut s, "k0");
    let k1 = w.f64(&mut s, "k1");
    let l1 = w.f64(&mut s, "l1");
    let c_bar = w.f64(&mut s, "c_bar");
    let c_tilde = w.f64(&mut s, "c_tilde");
    macro_rules! opt {
        ($field:ident) => {
            if let Some(v) = w.f64(&mut s, stringify!($field)) {
                params.$field = v;
            }
        };
    }
    opt!(q_moment);
    opt!(beta);
    opt!(eps_bar);
    opt!(epsilon);
    opt!(eta);
    opt!(holder_p);
    opt!(splitting_offset);
    opt!(euler_offset);
    let n_eval = w.f64(&mut s, "n_eval").unwrap_or(1e6);
    let gn_samples = w.usize(&mut s, "gn_samples").unwrap_or(64);
    let gn_seed = w.u64(&mut s, "gn_seed").unwrap_or(0);
    w.finish(s);
    if study.is_none() {
        for (v, key) in [(k0, "analysis.k0"), (c_bar, "analysis.c_bar"), (c_tilde, "analysis.c_tilde")] {
            if v.is_none() && command == Some(Command::Constants) && !grid_present && !noise_present {
                w.issue(key, "required when [grid] and [noise] are absent");
            }
        }
    }
    // Placeholders stand in for run-time derived values during validation.
    params.k0 = k0.unwrap_or(1.0);
    params.k1 = k1.unwrap_or(0.0);
    params.l1 = l1.unwrap_or(0.0);
    params.c_bar = c_bar.unwrap_or(1.0);
    params.c_tilde = c_tilde.unwrap_or(1.0);
    // viscosity and horizon are reported under [physics]
    for e in params.violations() {
        let issue = core_issue("analysis", e);
        if !matches!(issue.key.as_str(), "analysis.viscosity" | "analysis.horizon") {
            w.issues.push(issue);
        }
    }
    if !(n_eval.is_finite() && n_eval > std::f64::consts::E) {
        w.issue("analysis.n_eval", format!("must be > e, got {n_eval}"));
    }
    if gn_samples == 0 {
        w.issue("analysis.gn_samples", "must be >= 1");
    }
    if let Some(nu) = viscosity {
        if !(nu.is_finite() && nu > 0.0) && study.is_none() {
            w.issue("physics.viscosity", format!("must be > 0, got {nu}"));
        }
    }
    if let Some(t) = horizon {
        if !(t.is_finite() && t > 0.0) && study.is_none() {
            w.issue("physics.horizon", format!("must be > 0, got {t}"));
        }
    }

    // [moments]
    let mut s = w.section(&root, "moments");
    let p_orders = w.list(&mut s, "p_orders", as_f64, "a number").unwrap_or_else(|| vec![1.0, 2.0]);
    let m_ladder = w
        .list(&mut s, "m_ladder", as_f64, "a number or \"inf\"")
        .unwrap_or_else(|| vec![1.0, 10.0, 100.0, f64::INFINITY]);
    let alpha_fractions = w
        .list(&mut s, "alpha_fractions", as_f64, "a number")
        .unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
    w.finish(s);
    for (i, p) in p_orders.iter().enumerate() {
        if !(p.is_finite() && *p >= 1.0) {
            w.issue(format!("moments.p_orders[{i}]"), format!("must be >= 1, got {p}"));
        }
    }
    for (i, m) in m_ladder.iter().enumerate() {
        if m.is_nan() || *m < 0.0 {
            w.issue(format!("moments.m_ladder[{i}]"), format!("must be >= 0, got {m}"));
        }
    }
    for (i, a) in alpha_fractions.iter().enumerate() {
        if !(a.is_finite() && *a >= 0.0) {
            w.issue(format!("moments.alpha_fractions[{i}]"), format!("must be >= 0, got {a}"));
        }
    }

    if !w.issues.is_empty() {
        return Err(w.issues);
    }
    Ok(RunConfig {
        command: command.expect("checked"),
        output_dir,
        viscosity: viscosity.expect("checked"),
        horizon: horizon.expect("checked"),
        study,
        n_steps,
        path_seed,
        analysis: AnalysisSettings {
            params,
            k0,
            k1,
            l1,
            c_bar,
            c_tilde,
            n_eval,
            gn_samples,
            gn_seed,
        },
        moments: MomentSettings {
            p_orders,
            m_ladder,
            alpha_fractions,
        },
    })
}
