//! Fourier-Galerkin representation of periodic divergence-free fields.

mod fft;
mod field;
mod grid;
mod io;
mod ops;

pub use field::{Mode, RawField, SpectralField};
pub use grid::Grid;
pub use io::{read_snapshot, write_snapshot, SNAPSHOT_MAGIC};
pub use ops::{
    bilinear_b, l4_norm, leray_project, norm_bundle, physical_l2_sq, sobolev_sq, stokes_apply, trilinear_form,
    NormBundle,
};

pub(crate) use ops::{apply_shifted_stokes, resolvent};
