use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Square periodic box `[0, L]^2` sampled on an `n x n` collocation grid.
///
/// Spectral coefficients are stored in FFT order: index `i` along an axis
/// carries the integer wavenumber `i` for `i <= n/2` and `i - n` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n_modes: usize,
    box_length: f64,
    dealias_cutoff: usize,
}

impl Grid {
    pub fn new(n_modes: usize, box_length: f64) -> Result<Self> {
        if n_modes < 4 {
            return Err(Error::InvalidGrid(format!(
                "n_modes must be at least 4, got {n_modes}"
            )));
        }
        if n_modes % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_modes must be even, got {n_modes}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        // Largest cutoff with 3c < n: triple products of retained modes are
        // then integrated exactly by the collocation sum.
        let dealias_cutoff = (n_modes - 1) / 3;
        Ok(Self {
            n_modes,
            box_length,
            dealias_cutoff,
        })
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    #[inline]
    pub fn dealias_cutoff(&self) -> usize {
        self.dealias_cutoff
    }

    /// `2 pi / L`, the physical size of one lattice step in wavenumber space.
    #[inline]
    pub fn wavenumber_unit(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Number of lattice points, `n^2`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n_modes * self.n_modes
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Integer wavenumber carried by FFT index `i` along one axis.
    #[inline]
    pub fn axis_wavenumber(&self, i: usize) -> i64 {
        let n = self.n_modes;
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Integer lattice vector `(k1, k2)` stored at flat index `idx`.
    #[inline]
    pub fn lattice(&self, idx: usize) -> (i64, i64) {
        let n = self.n_modes;
        (self.axis_wavenumber(idx / n), self.axis_wavenumber(idx % n))
    }

    /// Flat index of lattice vector `k`, or `None` if it is not representable.
    pub fn index_of(&self, k1: i64, k2: i64) -> Option<usize> {
        let n = self.n_modes as i64;
        let half = n / 2;
        let fold = |k: i64| -> Option<usize> {
            if k > half || k <= -half {
                None
            } else if k >= 0 {
                Some(k as usize)
            } else {
                Some((k + n) as usize)
            }
        };
        Some(fold(k1)? * self.n_modes + fold(k2)?)
    }

    /// Flat index of `-k` for the lattice vector stored at `idx`.
    ///
    /// The Nyquist row/column maps onto itself.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n_modes;
        let (i, j) = (idx / n, idx % n);
        ((n - i) % n) * n + (n - j) % n
    }

    /// Physical wavevector `2 pi k / L` at flat index `idx`.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        let (k1, k2) = self.lattice(idx);
        let s = self.wavenumber_unit();
        (k1 as f64 * s, k2 as f64 * s)
    }

    /// `|2 pi k / L|^2` at flat index `idx`: the Stokes eigenvalue.
    #[inline]
    pub fn stokes_eigenvalue(&self, idx: usize) -> f64 {
        let (a, b) = self.wavevector(idx);
        a * a + b * b
    }

    /// Whether lattice vector `k` survives the dealiasing truncation.
    #[inline]
    pub fn is_retained(&self, k1: i64, k2: i64) -> bool {
        let c = self.dealias_cutoff as i64;
        k1.abs() <= c && k2.abs() <= c
    }

    #[inline]
    pub fn is_retained_index(&self, idx: usize) -> bool {
        let (k1, k2) = self.lattice(idx);
        self.is_retained(k1, k2)
    }

    /// Physical coordinates of collocation point `(i, j)`.
    #[inline]
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let h = self.box_length / self.n_modes as f64;
        (i as f64 * h, j as f64 * h)
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^2 modes on [0, {}]^2", self.n_modes, self.box_length)
    }
}
