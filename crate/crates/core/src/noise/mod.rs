//! Q-Wiener increments on the Fourier lattice and the diffusion coefficient.

mod model;
mod path;
mod rng;

pub use model::{build_noise_model, Diffusion, Modulation, NoiseKind, NoiseModel};
pub use path::{coarsen_path, read_path, sample_wiener_path, write_path, WienerPath, PATH_MAGIC};
pub use rng::{gaussian_pair, MAX_FINE_STEPS};
