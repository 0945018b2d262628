//! Picard iteration preconditioned by the exact viscous resolvent.

use crate::error::{Error, Result};
use crate::spectral::{apply_shifted_stokes, resolvent, SpectralField};

pub(crate) struct PicardOutcome {
    pub state: SpectralField,
    pub iterations: usize,
    pub residual: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub history: Vec<f64>,
}

/// Solves `(I + shift A) u + dt N(u) = rhs` by
/// `u <- (I + shift A)^{-1} [rhs - dt N(u)]`, starting from `init`.
///
/// The residual of iterate `m` equals `(I + shift A)(u_m - u_{m+1})`, so it is
/// available without an extra evaluation of `N`. The returned state is the
/// first iterate whose residual is at most `tol`.
pub(crate) fn picard(
    rhs: &SpectralField,
    init: SpectralField,
    shift: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
    nonlinear: impl Fn(&SpectralField) -> Result<Option<SpectralField>>,
) -> Result<PicardOutcome> {
    let mut current = init;
    let mut history = Vec::new();
    for m in 0..max_iter {
        let forcing = match nonlinear(&current)? {
            Some(n) => rhs.axpy(-dt, &n),
            None => rhs.clone(),
        };
        let next = resolvent(&forcing, shift);
        let residual = apply_shifted_stokes(&(&current - &next), shift).l2_sq().sqrt();
        history.push(residual);
        if !residual.is_finite() {
            break;
        }
        if residual <= tol {
            check_monotone_tail(&history);
            return Ok(PicardOutcome {
                state: current,
                iterations: m + 1,
                residual,
                history,
            });
        }
        current = next;
    }
    Err(Error::NonConvergence {
        iterations: history.len(),
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}

fn check_monotone_tail(history: &[f64]) {
    let start = history.len().saturating_sub(5).max(1);
    if history[start.min(history.len())..]
        .windows(2)
        .any(|w| w[1] > w[0])
    {
        log::warn!("Picard residual increased near convergence: {history:?}");
    }
}
