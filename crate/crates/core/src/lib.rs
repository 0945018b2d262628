//! Pseudo-spectral time integration of the stochastic incompressible
//! Navier-Stokes equations on the 2D periodic torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: Fourier-Galerkin fields, the Stokes operator, the
//!   dealiased advection term and norms.
//! * [`noise`]: trace-class Q-Wiener increments and the diffusion coefficient.
//! * [`schemes`]: splitting, fully implicit and semi-implicit Euler steps.
//! * [`theory`]: closed-form rate constants, localization thresholds and
//!   localization indicators.
//! * [`harness`]: Monte Carlo strong-error studies, rate fitting and moment
//!   statistics.

pub mod error;
pub mod harness;

pub mod noise;
pub mod schemes;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use noise::{Modulation, NoiseKind, NoiseModel, WienerPath};

pub use schemes::{SchemeKind, SchemeParams, StepDiagnostics, TrajectoryRecord};
pub use spectral::{Grid, NormBundle, SpectralField};

/// Crate version string recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
