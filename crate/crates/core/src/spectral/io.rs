//! Binary field snapshots.
//!
//! Layout (little-endian): `b"SNS2"`, `u32` n_modes, `f64` box_length, then
//! for every lattice point in storage order (row-major over the FFT-ordered
//! `n x n` lattice) the four `f64` values `re1, im1, re2, im2`.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::Grid;
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SNS2";

pub fn write_snapshot<W: Write>(field: &SpectralField, mut w: W) -> Result<()> {
    let g = field.grid();
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(g.n_modes() as u32).to_le_bytes())?;
    w.write_all(&g.box_length().to_le_bytes())?;
    let mut buf = Vec::with_capacity(32 * g.len());
    for c in field.coeffs() {
        for v in [c[0].re, c[0].im, c[1].re, c[1].im] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Format(format!("bad snapshot magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let l = f64::from_le_bytes(b8);
    let grid = Grid::new(n, l).map_err(|e| Error::Format(e.to_string()))?;
    let mut coeffs = Vec::with_capacity(grid.len());
    let mut vals = [0.0f64; 4];
    for _ in 0..grid.len() {
        for v in vals.iter_mut() {
            r.read_exact(&mut b8)?;
            *v = f64::from_le_bytes(b8);
        }
        coeffs.push([Complex64::new(vals[0], vals[1]), Complex64::new(vals[2], vals[3])]);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after snapshot", rest.len())));
    }
    Ok(SpectralField::from_coeffs_unchecked(grid, coeffs))
}
