use num_complex::Complex64;

use super::energy_defect;
use super::params::{SchemeParams, StepDiagnostics};
use super::solver::picard;
use crate::error::{invalid, Result};
use crate::noise::Diffusion;
use crate::spectral::{bilinear_b, norm_bundle, SpectralField};

/// Approximates the flow of `du/dt + nu A u + B(u, u) = 0` over `duration`
/// with `params.inner_substeps` implicit Euler sub-steps.
pub fn deterministic_substep(u_start: &SpectralField, duration: f64, params: &SchemeParams) -> Result<SpectralField> {
    deterministic_flow(u_start, duration, params).map(|(u, _)| u)
}

/// As [`deterministic_substep`], also returning diagnostics aggregated over
/// the sub-steps (iterations summed, residual and energy defect maximised).
pub(crate) fn deterministic_flow(
    u_start: &SpectralField,
    duration: f64,
    params: &SchemeParams,
) -> Result<(SpectralField, StepDiagnostics)> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(invalid("duration", format!("must be > 0, got {duration}")));
    }
    let h = duration / params.inner_substeps.max(1) as f64;
    let shift = params.viscosity * h;
    let mut u = u_start.clone();
    let mut diag = StepDiagnostics::default();
    for _ in 0..params.inner_substeps.max(1) {
        let out = picard(&u, u.clone(), shift, h, params.solver_tol, params.solver_max_iter, |w| {
            if params.advection {
                bilinear_b(w, w).map(Some)
            } else {
                Ok(None)
            }
        })?;
        diag.solver_iterations += out.iterations;
        diag.residual = diag.residual.max(out.residual);
        diag.energy_defect = diag.energy_defect.max(energy_defect(&out.state, &u, None, shift));
        u = out.state;
    }
    diag.grad_l2 = norm_bundle(&u).grad_l2;
    Ok((u, diag))
}

/// Solves `dy = G(t, y) dW` across one splitting step.
///
/// `dw` holds one or more consecutive sub-step increments, concatenated in
/// time order; `n_noise_modes` separates them. Additive noise is integrated
/// exactly with the summed increment; otherwise Euler-Maruyama runs over the
/// sub-steps.
pub fn stochastic_substep<D: Diffusion + ?Sized>(
    y_start: &SpectralField,
    noise: &D,
    t_start: f64,
    duration: f64,
    dw: &[Complex64],
    n_noise_modes: usize,
) -> Result<SpectralField> {
    if n_noise_modes == 0 || dw.len() % n_noise_modes != 0 || dw.is_empty() {
        return Err(invalid(
            "increments",
            format!("{} values do not split into blocks of {n_noise_modes}", dw.len()),
        ));
    }
    let blocks = dw.len() / n_noise_modes;
    if noise.is_additive() {
        let mut total = dw[..n_noise_modes].to_vec();
        for block in dw.chunks_exact(n_noise_modes).skip(1) {
            for (t, x) in total.iter_mut().zip(block) {
                *t += x;
            }
        }
        return Ok(y_start + &noise.apply(t_start, y_start, &total)?);
    }
    let h = duration / blocks as f64;
    let mut y = y_start.clone();
    for (j, block) in dw.chunks_exact(n_noise_modes).enumerate() {
        y = &y + &noise.apply(t_start + j as f64 * h, &y, block)?;
    }
    Ok(y)
}

/// One splitting step: deterministic flow over `dt`, then the noise flow
/// driven by the sub-step increments in `dw`. The returned state is the grid
/// value at `t_{step+1}`.
pub fn splitting_step<D: Diffusion + ?Sized>(
    state: &SpectralField,
    step: usize,
    params: &SchemeParams,
    noise: &D,
    dw: &[Complex64],
    n_noise_modes: usize,
) -> Result<(SpectralField, StepDiagnostics)> {
    let dt = params.dt();
    let (u_end, mut diag) = deterministic_flow(state, dt, params)?;
    let y_end = stochastic_substep(&u_end, noise, step as f64 * dt, dt, dw, n_noise_modes)?;
    diag.grad_l2 = norm_bundle(&y_end).grad_l2;
    Ok((y_end, diag))
}
