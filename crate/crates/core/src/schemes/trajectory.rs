use std::borrow::Cow;
use std::io::Write;

use super::euler::{implicit_euler_step, semi_implicit_step};
use super::params::{SchemeKind, SchemeParams, StepDiagnostics};
use super::splitting::splitting_step;
use crate::error::{Error, Result};
use crate::noise::{coarsen_path, NoiseModel, WienerPath};
use crate::spectral::{norm_bundle, SpectralField};

/// Grid values `u_N(t_k)`, `k = 0..=N`, of one scheme run with its
/// per-step diagnostics (`diagnostics[k - 1]` belongs to step `k`).
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub states: Vec<SpectralField>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub path_seed: u64,
    pub params: SchemeParams,
}

impl TrajectoryRecord {
    /// Time of grid point `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.params.dt()
    }

    /// CSV with columns
    /// `k,t,l2,grad_l2,stokes_l2,solver_iterations,residual,energy_defect`.
    /// Row `k = 0` carries zero diagnostics.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "k",
            "t",
            "l2",
            "grad_l2",
            "stokes_l2",
            "solver_iterations",
            "residual",
            "energy_defect",
        ])?;
        for (k, state) in self.states.iter().enumerate() {
            let nb = norm_bundle(state);
            let d = if k == 0 {
                StepDiagnostics::default()
            } else {
                self.diagnostics[k - 1]
            };
            out.write_record(&[
                k.to_string(),
                format!("{:e}", self.time(k)),
                format!("{:e}", nb.l2),
                format!("{:e}", nb.grad_l2),
                format!("{:e}", nb.stokes_l2),
                d.solver_iterations.to_string(),
                format!("{:e}", d.residual),
                format!("{:e}", d.energy_defect),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs `params.n_steps` steps of the selected scheme from `u0` along `path`.
///
/// `path` may be finer than the scheme grid: its length must be a multiple of
/// `N`. Euler schemes use the exactly coarsened increments; the splitting
/// scheme uses the fine increments of each step (summed exactly for additive
/// noise).
pub fn run_trajectory(
    u0: &SpectralField,
    params: &SchemeParams,
    noise: &NoiseModel,
    path: &WienerPath,
) -> Result<TrajectoryRecord> {
    let mut states = Vec::with_capacity(params.n_steps + 1);
    let mut diagnostics = Vec::with_capacity(params.n_steps);
    states.push(u0.clone());
    integrate(u0, params, noise, path, |_, u, d| {
        states.push(u.clone());
        diagnostics.push(*d);
    })?;
    Ok(TrajectoryRecord {
        states,
        diagnostics,
        path_seed: path.seed(),
        params: params.clone(),
    })
}

/// Drives the scheme and hands every new grid value `(k, u_k, diag_k)`,
/// `k = 1..=N`, to `observe`. Returns `u_N`.
pub(crate) fn integrate(
    u0: &SpectralField,
    params: &SchemeParams,
    noise: &NoiseModel,
    path: &WienerPath,
    mut observe: impl FnMut(usize, &SpectralField, &StepDiagnostics),
) -> Result<SpectralField> {
    params.validate()?;
    noise.grid().ensure_same(u0.grid())?;
    let n = params.n_steps;
    if path.n_fine() % n != 0 {
        return Err(Error::NotDivisible {
            what: "path length",
            numerator: path.n_fine(),
            denominator: n,
        });
    }
    if path.n_modes() != noise.n_noise_modes() {
        return Err(Error::InvalidParameter {
            name: "path",
            reason: format!(
                "path carries {} modes, noise model has {}",
                path.n_modes(),
                noise.n_noise_modes()
            ),
        });
    }
    let factor = path.n_fine() / n;
    let nm = noise.n_noise_modes();
    let coarse: Cow<'_, WienerPath> = match params.kind {
        SchemeKind::Splitting => Cow::Borrowed(path),
        _ if factor == 1 => Cow::Borrowed(path),
        _ => Cow::Owned(coarsen_path(path, factor)?),
    };

    let mut u = u0.clone();
    for k in 0..n {
        let result = match params.kind {
            SchemeKind::FullyImplicit => implicit_euler_step(&u, k, params, noise, coarse.step(k)),
            SchemeKind::SemiImplicit => semi_implicit_step(&u, k, params, noise, coarse.step(k)),
            SchemeKind::Splitting => splitting_step(
                &u,
                k,
                params,
                noise,
                coarse.steps(k * factor..(k + 1) * factor),
                nm,
            ),
        };
        let (next, diag) = result.map_err(|e| Error::StepFailed {
            step: k + 1,
            source: Box::new(e),
        })?;
        u = next;
        observe(k + 1, &u, &diag);
    }
    Ok(u)
}
