use std::io::{Read, Write};

use num_complex::Complex64;

use super::model::NoiseModel;
use super::rng::{quantize, quantum, ModeStream, MAX_FINE_STEPS};
use crate::error::{invalid, Error, Result};

pub const PATH_MAGIC: &[u8; 4] = b"SNSW";

/// Brownian increments of every noise mode on a uniform time grid.
///
/// Increments are quantised to a per-mode power-of-two lattice fine enough to
/// be statistically invisible (relative spacing `2^-28` of the standard
/// deviation) and coarse enough that every partial sum of a path is exact.
/// Coarsening is therefore independent of summation order.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerPath {
    seed: u64,
    n_steps: usize,
    dt: f64,
    n_modes: usize,
    increments: Vec<Complex64>,
}

impl WienerPath {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of time steps on this path's grid.
    pub fn n_fine(&self) -> usize {
        self.n_steps
    }

    pub fn dt_fine(&self) -> f64 {
        self.dt
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// All mode increments of step `j`.
    pub fn step(&self, j: usize) -> &[Complex64] {
        &self.increments[j * self.n_modes..(j + 1) * self.n_modes]
    }

    /// Increments of steps `range` concatenated in step order.
    pub fn steps(&self, range: std::ops::Range<usize>) -> &[Complex64] {
        &self.increments[range.start * self.n_modes..range.end * self.n_modes]
    }

    pub fn increment(&self, step: usize, mode: usize) -> Complex64 {
        self.increments[step * self.n_modes + mode]
    }

    /// `W(T)` per mode.
    pub fn endpoint(&self) -> Vec<Complex64> {
        let mut acc = vec![Complex64::default(); self.n_modes];
        for j in 0..self.n_steps {
            for (a, x) in acc.iter_mut().zip(self.step(j)) {
                *a += x;
            }
        }
        acc
    }

    pub fn coarsen(&self, factor: usize) -> Result<WienerPath> {
        coarsen_path(self, factor)
    }
}

/// Draws the increments of every mode of `model` on `n_fine` steps over
/// `[0, horizon]`. Mode `m` at step `j` depends only on `(seed, j, m)`.
pub fn sample_wiener_path(model: &NoiseModel, horizon: f64, n_fine: usize, seed: u64) -> Result<WienerPath> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("must be positive, got {horizon}")));
    }
    if n_fine == 0 || n_fine > MAX_FINE_STEPS {
        return Err(invalid("n_fine", format!("must lie in [1, {MAX_FINE_STEPS}], got {n_fine}")));
    }
    let dt = horizon / n_fine as f64;
    let n_modes = model.n_noise_modes();
    let mut increments = vec![Complex64::default(); n_fine * n_modes];
    for m in 0..n_modes {
        // xi = sqrt(lambda dt) (g1 - i g2) / sqrt(2), so E|xi|^2 = lambda dt.
        let sd = (model.mode_lambda(m) * dt / 2.0).sqrt();
        if sd == 0.0 {
            continue;
        }
        let q = quantum(sd);
        let mut stream = ModeStream::new(seed, m, 0);
        for j in 0..n_fine {
            let (g1, g2) = stream.next_pair();
            increments[j * n_modes + m] = Complex64::new(quantize(sd * g1, q), quantize(-sd * g2, q));
        }
    }
    Ok(WienerPath {
        seed,
        n_steps: n_fine,
        dt,
        n_modes,
        increments,
    })
}

/// Sums consecutive blocks of `factor` increments in ascending step order.
pub fn coarsen_path(path: &WienerPath, factor: usize) -> Result<WienerPath> {
    if factor == 0 || path.n_steps % factor != 0 {
        return Err(Error::NotDivisible {
            what: "path length",
            numerator: path.n_steps,
            denominator: factor,
        });
    }
    let n_coarse = path.n_steps / factor;
    let nm = path.n_modes;
    let mut increments = vec![Complex64::default(); n_coarse * nm];
    for j in 0..n_coarse {
        let out = &mut increments[j * nm..(j + 1) * nm];
        for i in j * factor..(j + 1) * factor {
            for (o, x) in out.iter_mut().zip(path.step(i)) {
                *o += x;
            }
        }
    }
    Ok(WienerPath {
        seed: path.seed,
        n_steps: n_coarse,
        dt: path.dt * factor as f64,
        n_modes: nm,
        increments,
    })
}

/// Layout (little-endian): `b"SNSW"`, `u64` seed, `u32` step count, `f64` dt,
/// then `re, im` as `f64` for every increment in `(step, mode)` order.
pub fn write_path<W: Write>(path: &WienerPath, mut w: W) -> Result<()> {
    w.write_all(PATH_MAGIC)?;
    w.write_all(&path.seed.to_le_bytes())?;
    w.write_all(&(path.n_steps as u32).to_le_bytes())?;
    w.write_all(&path.dt.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * path.increments.len());
    for z in &path.increments {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a dump written by [`write_path`]. The mode count is inferred from
/// the payload length.
pub fn read_path<R: Read>(mut r: R) -> Result<WienerPath> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != PATH_MAGIC {
        return Err(Error::Format(format!("bad path magic {magic:?}")));
    }
    let mut b8 = [0u8; 8];
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    r.read_exact(&mut b4)?;
    let n_steps = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let dt = f64::from_le_bytes(b8);
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if n_steps == 0 || payload.len() % (16 * n_steps) != 0 {
        return Err(Error::Format(format!(
            "payload of {} bytes does not hold {} steps",
            payload.len(),
            n_steps
        )));
    }
    let n_modes = payload.len() / (16 * n_steps);
    let increments = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    Ok(WienerPath {
        seed,
        n_steps,
        dt,
        n_modes,
        increments,
    })
}
