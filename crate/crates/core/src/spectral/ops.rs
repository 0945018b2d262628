use num_complex::Complex64;

use super::field::{forward_pair, inverse_pair, Mode, RawField, SpectralField};
use super::grid::Grid;
use crate::error::Result;

/// Norms of a velocity field used by the schemes, diagnostics and theory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormBundle {
    /// `|u|_{L^2}`
    pub l2: f64,
    /// `|grad u|_{L^2}`
    pub grad_l2: f64,
    /// `||u||_V = (|u|^2 + |grad u|^2)^{1/2}`
    pub v: f64,
    /// `||u||_{L^4}`, collocation quadrature
    pub l4: f64,
    /// `|A u|_{L^2}`
    pub stokes_l2: f64,
    /// `||u||_X`, the norm of `H ∩ L^4`; equal to `l4`.
    pub x_norm: f64,
    /// `(|grad u|^2 + |A u|^2)^{1/2}`
    pub triple: f64,
}

/// Orthogonal projection onto divergence-free, mean-zero fields:
/// `c_k <- (I - k k^T / |k|^2) c_k`, `c_0 <- 0`.
///
/// Nyquist lines (`|k_i| = n/2`) are dropped: `k` and `-k` share a storage
/// slot there, so no projected coefficient can stay Hermitian.
pub fn leray_project(f: &RawField) -> SpectralField {
    let grid = *f.grid();
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| project_mode(&grid, i, *c))
        .collect();
    SpectralField::from_coeffs_unchecked(grid, coeffs)
}

#[inline]
fn project_mode(grid: &Grid, idx: usize, c: Mode) -> Mode {
    let (k1, k2) = grid.lattice(idx);
    let nyq = (grid.n_modes() / 2) as i64;
    if (k1 == 0 && k2 == 0) || k1 == nyq || k2 == nyq {
        return [Complex64::default(); 2];
    }
    let (k1, k2) = (k1 as f64, k2 as f64);
    let dot = (c[0] * k1 + c[1] * k2) / (k1 * k1 + k2 * k2);
    [c[0] - dot * k1, c[1] - dot * k2]
}

/// `A u = -Δ u`: each coefficient scaled by `|2 pi k / L|^2`.
pub fn stokes_apply(u: &SpectralField) -> SpectralField {
    let g = *u.grid();
    u.map_modes(|i, c| {
        let lam = g.stokes_eigenvalue(i);
        [c[0] * lam, c[1] * lam]
    })
}

/// `(I + s A)^{-1} u`, diagonal per mode.
pub(crate) fn resolvent(u: &SpectralField, s: f64) -> SpectralField {
    let g = *u.grid();
    u.map_modes(|i, c| {
        let f = 1.0 / (1.0 + s * g.stokes_eigenvalue(i));
        [c[0] * f, c[1] * f]
    })
}

/// `(I + s A) u`.
pub(crate) fn apply_shifted_stokes(u: &SpectralField, s: f64) -> SpectralField {
    let g = *u.grid();
    u.map_modes(|i, c| {
        let f = 1.0 + s * g.stokes_eigenvalue(i);
        [c[0] * f, c[1] * f]
    })
}

/// Derivative multiplier `i κ_j` along one axis; zero on the Nyquist line.
#[inline]
fn derivative_factor(grid: &Grid, axis_k: i64) -> Complex64 {
    if axis_k.unsigned_abs() as usize * 2 == grid.n_modes() {
        Complex64::default()
    } else {
        Complex64::new(0.0, axis_k as f64 * grid.wavenumber_unit())
    }
}

/// `B(u, v)`: Leray projection of `(u . ∇) v`, evaluated pseudo-spectrally and
/// truncated to the dealiased lattice.
pub fn bilinear_b(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.grid().ensure_same(v.grid())?;
    let grid = *u.grid();
    let n2 = grid.len();

    let (u1, u2) = u.to_physical();

    // ∂_1 v_i and ∂_2 v_i, packed two at a time into one inverse transform.
    let mut d1v1 = vec![Complex64::default(); n2];
    let mut d2v1 = vec![Complex64::default(); n2];
    let mut d1v2 = vec![Complex64::default(); n2];
    let mut d2v2 = vec![Complex64::default(); n2];
    for (i, c) in v.coeffs().iter().enumerate() {
        let (k1, k2) = grid.lattice(i);
        let (f1, f2) = (derivative_factor(&grid, k1), derivative_factor(&grid, k2));
        d1v1[i] = f1 * c[0];
        d2v1[i] = f2 * c[0];
        d1v2[i] = f1 * c[1];
        d2v2[i] = f2 * c[1];
    }
    let (g11, g12) = inverse_pair(&grid, &d1v1, &d2v1);
    let (g21, g22) = inverse_pair(&grid, &d1v2, &d2v2);

    let mut w1 = vec![0.0; n2];
    let mut w2 = vec![0.0; n2];
    for x in 0..n2 {
        w1[x] = u1[x] * g11[x] + u2[x] * g12[x];
        w2[x] = u1[x] * g21[x] + u2[x] * g22[x];
    }

    let (a, b) = forward_pair(&grid, &w1, &w2);
    let coeffs = a
        .into_iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| {
            if grid.is_retained_index(i) {
                project_mode(&grid, i, [x, y])
            } else {
                [Complex64::default(); 2]
            }
        })
        .collect();
    Ok(SpectralField::from_coeffs_unchecked(grid, coeffs))
}

/// `b(u, v, w) = <B(u, v), w>`.
pub fn trilinear_form(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> Result<f64> {
    u.grid().ensure_same(w.grid())?;
    Ok(bilinear_b(u, v)?.inner(w))
}

/// `(|u|^2, |grad u|^2, |A u|^2)` from the coefficients alone.
pub fn sobolev_sq(u: &SpectralField) -> (f64, f64, f64) {
    let g = *u.grid();
    let area = g.box_length() * g.box_length();
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (i, c) in u.coeffs().iter().enumerate() {
        let m = c[0].norm_sqr() + c[1].norm_sqr();
        let lam = g.stokes_eigenvalue(i);
        s0 += m;
        s1 += lam * m;
        s2 += lam * lam * m;
    }
    (area * s0, area * s1, area * s2)
}

pub fn norm_bundle(u: &SpectralField) -> NormBundle {
    let (s0, s1, s2) = sobolev_sq(u);
    let l2 = s0.sqrt();
    let grad_l2 = s1.sqrt();
    let stokes_l2 = s2.sqrt();
    let l4 = l4_norm(u);
    NormBundle {
        l2,
        grad_l2,
        v: (l2 * l2 + grad_l2 * grad_l2).sqrt(),
        l4,
        stokes_l2,
        x_norm: l4,
        triple: (grad_l2 * grad_l2 + stokes_l2 * stokes_l2).sqrt(),
    }
}

/// `(int |u|^4 dx)^{1/4}` by the trapezoidal rule on the collocation grid.
pub fn l4_norm(u: &SpectralField) -> f64 {
    let g = u.grid();
    let (u1, u2) = u.to_physical();
    let h = g.box_length() / g.n_modes() as f64;
    let sum: f64 = u1
        .iter()
        .zip(&u2)
        .map(|(a, b)| {
            let m = a * a + b * b;
            m * m
        })
        .sum();
    (h * h * sum).sqrt().sqrt()
}

/// `int |u|^2 dx` by the trapezoidal rule on the collocation grid.
pub fn physical_l2_sq(u: &SpectralField) -> f64 {
    let g = u.grid();
    let (u1, u2) = u.to_physical();
    let h = g.box_length() / g.n_modes() as f64;
    h * h * u1.iter().zip(&u2).map(|(a, b)| a * a + b * b).sum::<f64>()
}
