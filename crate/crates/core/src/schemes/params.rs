use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Result};

pub const DEFAULT_SOLVER_TOL: f64 = 1e-11;
pub const DEFAULT_SOLVER_MAX_ITER: usize = 200;
pub const DEFAULT_INNER_SUBSTEPS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Splitting,
    FullyImplicit,
    SemiImplicit,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::Splitting,
        SchemeKind::FullyImplicit,
        SchemeKind::SemiImplicit,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::Splitting => "splitting",
            SchemeKind::FullyImplicit => "fully_implicit",
            SchemeKind::SemiImplicit => "semi_implicit",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected splitting, fully_implicit or semi_implicit)"))
    }
}

/// Time-stepping parameters. The grid is `t_k = k T / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemeParams {
    pub kind: SchemeKind,
    pub viscosity: f64,
    pub horizon: f64,
    pub n_steps: usize,
    /// Absolute `L^2` residual at which the step solvers stop.
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    /// Implicit Euler sub-steps approximating the deterministic flow of one
    /// splitting step.
    pub inner_substeps: usize,
    /// Include `B(u, u)`. Disabling it is only meant for diagnostics.
    pub advection: bool,
}

impl SchemeParams {
    pub fn new(kind: SchemeKind, viscosity: f64, horizon: f64, n_steps: usize) -> Result<Self> {
        let p = Self {
            kind,
            viscosity,
            horizon,
            n_steps,
            solver_tol: DEFAULT_SOLVER_TOL,
            solver_max_iter: DEFAULT_SOLVER_MAX_ITER,
            inner_substeps: DEFAULT_INNER_SUBSTEPS,
            advection: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity.is_finite() && self.viscosity > 0.0) {
            return Err(invalid("viscosity", format!("must be > 0, got {}", self.viscosity)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid("horizon", format!("must be > 0, got {}", self.horizon)));
        }
        if self.n_steps == 0 {
            return Err(invalid("n_steps", "must be >= 1"));
        }
        if !(self.solver_tol.is_finite() && self.solver_tol > 0.0) {
            return Err(invalid("solver_tol", format!("must be > 0, got {}", self.solver_tol)));
        }
        if self.solver_max_iter == 0 {
            return Err(invalid("solver_max_iter", "must be >= 1"));
        }
        if self.inner_substeps == 0 {
            return Err(invalid("inner_substeps", "must be >= 1"));
        }
        Ok(())
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn with_kind(&self, kind: SchemeKind) -> Self {
        Self { kind, ..self.clone() }
    }

    pub fn with_steps(&self, n_steps: usize) -> Self {
        Self { n_steps, ..self.clone() }
    }
}

/// Per-step solver and consistency diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    pub solver_iterations: usize,
    pub residual: f64,
    pub energy_defect: f64,
    pub grad_l2: f64,
}
