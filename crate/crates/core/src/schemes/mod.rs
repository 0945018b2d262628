//! Time discretisations of `du + [nu A u + B(u, u)] dt = G(u) dW`.
//!
//! * [`implicit_euler_step`]: nonlinear solve for the new state.
//! * [`semi_implicit_step`]: advection linearised at the previous state.
//! * [`splitting_step`]: deterministic Navier-Stokes flow followed by the
//!   pure noise flow `dy = G(y) dW`.

mod euler;
mod params;
mod solver;
mod splitting;
mod trajectory;

pub use euler::{implicit_euler_step, semi_implicit_step};
pub use params::{
    SchemeKind, SchemeParams, StepDiagnostics, DEFAULT_INNER_SUBSTEPS, DEFAULT_SOLVER_MAX_ITER,
    DEFAULT_SOLVER_TOL,
};
pub use splitting::{deterministic_substep, splitting_step, stochastic_substep};
pub use trajectory::{run_trajectory, TrajectoryRecord};

pub(crate) use trajectory::integrate;

use crate::spectral::SpectralField;

/// `(u_k - u_{k-1}, u_k) + nu dt |grad u_k|^2 - (g, u_k)`, which vanishes for an
/// exact step because the advection term is orthogonal to `u_k`.
pub(crate) fn energy_defect(
    next: &SpectralField,
    prev: &SpectralField,
    forcing: Option<&SpectralField>,
    nu_dt: f64,
) -> f64 {
    let grad_sq = crate::spectral::norm_bundle(next).grad_l2.powi(2);
    let mut d = (next - prev).inner(next) + nu_dt * grad_sq;
    if let Some(g) = forcing {
        d -= g.inner(next);
    }
    d.abs()
}
