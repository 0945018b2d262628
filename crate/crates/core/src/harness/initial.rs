use std::fmt;

use num_complex::Complex64;

use crate::noise::gaussian_pair;
use crate::spectral::{leray_project, Grid, RawField, SpectralField};

/// Named initial velocity fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialCondition {
    Zero,
    TaylorGreen { amplitude: f64 },
    /// Random dealiased field with coefficient envelope `(1 + |k|^2)^(-decay/2)`,
    /// rescaled to `|u|_{L^2} = amplitude`.
    RandomSmooth { decay: f64, amplitude: f64, seed: u64 },
}

impl InitialCondition {
    pub fn build(&self, grid: Grid) -> SpectralField {
        match *self {
            InitialCondition::Zero => SpectralField::zeros(grid),
            InitialCondition::TaylorGreen { amplitude } => SpectralField::taylor_green(grid, amplitude),
            InitialCondition::RandomSmooth { decay, amplitude, seed } => {
                random_smooth_field(grid, decay, amplitude, seed)
            }
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Zero => write!(f, "zero"),
            InitialCondition::TaylorGreen { amplitude } => write!(f, "taylor_green(amplitude={amplitude})"),
            InitialCondition::RandomSmooth { decay, amplitude, seed } => {
                write!(f, "random_smooth(decay={decay}, amplitude={amplitude}, seed={seed})")
            }
        }
    }
}

/// Divergence-free random field on the dealiased modes. Deterministic in
/// `(grid, decay, seed)`; zero when `amplitude` is zero.
pub fn random_smooth_field(grid: Grid, decay: f64, amplitude: f64, seed: u64) -> SpectralField {
    let c = grid.dealias_cutoff() as i64;
    let mut raw = RawField::zeros(grid);
    let mut counter = 0usize;
    for k2 in 0..=c {
        for k1 in -c..=c {
            if k2 == 0 && k1 <= 0 {
                continue;
            }
            let (a, b) = gaussian_pair(seed, 0, counter);
            let (d, e) = gaussian_pair(seed, 1, counter);
            counter += 1;
            let env = (1.0 + (k1 * k1 + k2 * k2) as f64).powf(-0.5 * decay);
            raw.set_mode(k1, k2, [Complex64::new(a, b) * env, Complex64::new(d, e) * env])
                .expect("dealiased modes lie on the grid");
        }
    }
    let u = leray_project(&raw);
    let norm = u.l2_sq().sqrt();
    if norm == 0.0 || amplitude == 0.0 {
        return SpectralField::zeros(grid);
    }
    u.scaled(amplitude / norm)
}
