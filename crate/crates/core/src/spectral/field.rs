use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::fft::Fft2;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Fourier coefficients of the two velocity components at one lattice point.
pub type Mode = [Complex64; 2];

const ZERO_MODE: Mode = [Complex64::new(0.0, 0.0); 2];

/// Spectral vector field with no structural guarantees.
///
/// This is the input type of [`leray_project`](super::leray_project); every
/// other operation works on [`SpectralField`].
#[derive(Clone, Debug, PartialEq)]
pub struct RawField {
    grid: Grid,
    coeffs: Vec<Mode>,
}

impl RawField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO_MODE; grid.len()],
        }
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Mode>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    /// Samples a real vector field on the collocation grid (row-major, first
    /// index along `x1`) and returns its Hermitian-symmetrised spectrum.
    pub fn from_physical(grid: Grid, u1: &[f64], u2: &[f64]) -> Result<Self> {
        if u1.len() != grid.len() || u2.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples per component",
                grid.len()
            )));
        }
        let (a, b) = forward_pair(&grid, u1, u2);
        let coeffs = a.into_iter().zip(b).map(|(x, y)| [x, y]).collect();
        let mut raw = Self { grid, coeffs };
        raw.symmetrize();
        Ok(raw)
    }

    /// Sets the coefficient at `k` and its conjugate at `-k`.
    pub fn set_mode(&mut self, k1: i64, k2: i64, c: Mode) -> Result<()> {
        let idx = self
            .grid
            .index_of(k1, k2)
            .ok_or_else(|| Error::InvalidGrid(format!("mode ({k1}, {k2}) is not on the lattice")))?;
        let conj = self.grid.conjugate_index(idx);
        self.coeffs[idx] = c;
        if conj != idx {
            self.coeffs[conj] = [c[0].conj(), c[1].conj()];
        } else {
            self.coeffs[idx] = [Complex64::new(c[0].re, 0.0), Complex64::new(c[1].re, 0.0)];
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Mode] {
        &self.coeffs
    }

    fn symmetrize(&mut self) {
        for idx in 0..self.coeffs.len() {
            let c = self.grid.conjugate_index(idx);
            if c < idx {
                continue;
            }
            let a = self.coeffs[idx];
            let b = self.coeffs[c];
            let s = [
                (a[0] + b[0].conj()) * 0.5,
                (a[1] + b[1].conj()) * 0.5,
            ];
            self.coeffs[idx] = s;
            self.coeffs[c] = [s[0].conj(), s[1].conj()];
        }
    }
}

/// Divergence-free, mean-zero, real-valued velocity field in Fourier space.
///
/// The field represents `u(x) = sum_k c_k exp(i 2 pi k.x / L)`. Instances are
/// produced by [`leray_project`](super::leray_project) or by operations that
/// preserve the invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Mode>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO_MODE; grid.len()],
        }
    }

    /// Builds a field directly from coefficients that already satisfy the
    /// invariants. Used for bit-exact decoding and internal mode maps.
    pub(crate) fn from_coeffs_unchecked(grid: Grid, coeffs: Vec<Mode>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    /// Projects a physical-space sample onto divergence-free, mean-zero fields.
    pub fn from_physical(grid: Grid, u1: &[f64], u2: &[f64]) -> Result<Self> {
        Ok(super::leray_project(&RawField::from_physical(grid, u1, u2)?))
    }

    /// `a (sin x1 cos x2, -cos x1 sin x2)` with `x` scaled by `2 pi / L`.
    pub fn taylor_green(grid: Grid, amplitude: f64) -> Self {
        let s = grid.wavenumber_unit();
        let n = grid.n_modes();
        let mut u1 = vec![0.0; grid.len()];
        let mut u2 = vec![0.0; grid.len()];
        for i in 0..n {
            for j in 0..n {
                let (x, y) = grid.point(i, j);
                u1[i * n + j] = amplitude * (s * x).sin() * (s * y).cos();
                u2[i * n + j] = -amplitude * (s * x).cos() * (s * y).sin();
            }
        }
        Self::from_physical(grid, &u1, &u2).expect("sample sizes match the grid")
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Mode] {
        &self.coeffs
    }

    /// Coefficient at lattice vector `k`, if it is representable.
    pub fn coeff(&self, k1: i64, k2: i64) -> Option<Mode> {
        self.grid.index_of(k1, k2).map(|i| self.coeffs[i])
    }

    /// Applies a per-mode map `f(flat_index, coefficient)`.
    ///
    /// `f` must commute with conjugation and with the projection onto
    /// `k`-orthogonal vectors (real scalar multipliers do).
    pub(crate) fn map_modes(&self, mut f: impl FnMut(usize, Mode) -> Mode) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| f(i, *c))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c[0] == Complex64::default() && c[1] == Complex64::default())
    }

    /// L^2(D) pairing `int u . v dx`, evaluated by Parseval.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.grid, other.grid, "inner product across grids");
        let l = self.grid.box_length();
        let sum: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a[0] * b[0].conj() + a[1] * b[1].conj()).re)
            .sum();
        l * l * sum
    }

    /// `|u|_{L^2}^2`.
    pub fn l2_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_modes(|_, c| [c[0] * s, c[1] * s])
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> Self {
        assert_eq!(self.grid, other.grid, "axpy across grids");
        self.map_modes(|i, c| {
            let o = other.coeffs[i];
            [c[0] + o[0] * s, c[1] + o[1] * s]
        })
    }

    /// Zeroes every mode outside the dealiasing cutoff.
    pub fn dealiased(&self) -> Self {
        let g = self.grid;
        self.map_modes(|i, c| if g.is_retained_index(i) { c } else { ZERO_MODE })
    }

    pub fn is_dealiased(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(i, c)| self.grid.is_retained_index(i) || (c[0].norm() == 0.0 && c[1].norm() == 0.0))
    }

    /// `max_k |k . c_k| / max_k |c_k|` on the integer lattice (0 for the zero field).
    pub fn divergence_ratio(&self) -> f64 {
        let mut div: f64 = 0.0;
        let mut mag: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (k1, k2) = self.grid.lattice(i);
            div = div.max((c[0] * k1 as f64 + c[1] * k2 as f64).norm());
            mag = mag.max((c[0].norm_sqr() + c[1].norm_sqr()).sqrt());
        }
        if mag == 0.0 {
            0.0
        } else {
            div / mag
        }
    }

    /// Largest `|c(-k) - conj(c(k))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let m = self.coeffs[self.grid.conjugate_index(i)];
            worst = worst.max((m[0] - c[0].conj()).norm()).max((m[1] - c[1].conj()).norm());
        }
        worst
    }

    /// Velocity components on the collocation grid, row-major.
    pub fn to_physical(&self) -> (Vec<f64>, Vec<f64>) {
        let a: Vec<Complex64> = self.coeffs.iter().map(|c| c[0]).collect();
        let b: Vec<Complex64> = self.coeffs.iter().map(|c| c[1]).collect();
        inverse_pair(&self.grid, &a, &b)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

/// Spectra of two real grid functions with a single complex FFT,
/// normalised so that `f(x) = sum_k f_k exp(i 2 pi k.x / L)`.
pub(crate) fn forward_pair(grid: &Grid, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n2 = grid.len();
    let mut data: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    Fft2::get(grid.n_modes()).forward(&mut data);
    let scale = 1.0 / n2 as f64;
    let mut fa = vec![Complex64::default(); n2];
    let mut fb = vec![Complex64::default(); n2];
    for idx in 0..n2 {
        let f = data[idx] * scale;
        let g = data[grid.conjugate_index(idx)].conj() * scale;
        fa[idx] = (f + g) * 0.5;
        fb[idx] = (f - g) * Complex64::new(0.0, -0.5);
    }
    (fa, fb)
}

/// Grid values of two real fields given their Hermitian spectra.
pub(crate) fn inverse_pair(grid: &Grid, fa: &[Complex64], fb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut data: Vec<Complex64> = fa.iter().zip(fb).map(|(&x, &y)| x + i * y).collect();
    Fft2::get(grid.n_modes()).inverse(&mut data);
    (data.iter().map(|z| z.re).collect(), data.iter().map(|z| z.im).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn physical_roundtrip() {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let u = SpectralField::taylor_green(g, 1.3);
        let (u1, u2) = u.to_physical();
        let back = SpectralField::from_physical(g, &u1, &u2).unwrap();
        for (a, b) in u.coeffs().iter().zip(back.coeffs()) {
            assert!((a[0] - b[0]).norm() < 1e-15 && (a[1] - b[1]).norm() < 1e-15);
        }
    }

    #[test]
    fn taylor_green_spectrum_sits_on_diagonal_modes() {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let u = SpectralField::taylor_green(g, 1.0);
        for (idx, c) in u.coeffs().iter().enumerate() {
            let (k1, k2) = g.lattice(idx);
            let mag = c[0].norm() + c[1].norm();
            if k1.abs() == 1 && k2.abs() == 1 {
                assert!((c[0].norm() - 0.25).abs() < 1e-15, "{c:?}");
                assert!((c[1].norm() - 0.25).abs() < 1e-15);
            } else {
                assert!(mag < 1e-15);
            }
        }
        assert_eq!(u.hermitian_defect(), 0.0);
        assert!(u.divergence_ratio() < 1e-15);
    }

    #[test]
    fn set_mode_keeps_hermitian_pair() {
        let g = Grid::new(8, 1.0).unwrap();
        let mut raw = RawField::zeros(g);
        raw.set_mode(1, -2, [Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25)]).unwrap();
        let c = raw.coeffs()[g.index_of(-1, 2).unwrap()];
        assert_eq!(c[0], Complex64::new(1.0, -2.0));
        assert_eq!(c[1], Complex64::new(-0.5, -0.25));
        assert!(raw.set_mode(9, 0, [Complex64::default(); 2]).is_err());
    }
}
