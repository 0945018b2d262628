use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::spectral::{Grid, Mode, SpectralField};

/// Bounded Lipschitz scalar modulation `m` in `G(u) = sigma m(|u|_{L^2}) Q^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Modulation {
    /// `m(x) = sin x`: bounded by 1, 1-Lipschitz.
    Sine,
    /// `m(x) = c`.
    Constant(f64),
}

impl Modulation {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Modulation::Sine => x.sin(),
            Modulation::Constant(c) => c,
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match *self {
            Modulation::Sine => 1.0,
            Modulation::Constant(c) => c.abs(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Modulation::Sine => 1.0,
            Modulation::Constant(_) => 0.0,
        }
    }
}

impl Default for Modulation {
    fn default() -> Self {
        Modulation::Sine
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseKind {
    Additive,
    ScalarMultiplicative { sigma: f64, modulation: Modulation },
}

impl NoiseKind {
    pub fn is_additive(&self) -> bool {
        matches!(self, NoiseKind::Additive)
    }
}

/// One independent complex Brownian motion of the noise, attached to the
/// lattice pair `{k, -k}`.
#[derive(Clone, Debug)]
struct NoiseMode {
    k: (i64, i64),
    index: usize,
    conj_index: usize,
    lambda: f64,
    /// Unit vector orthogonal to `k`, identical for `k` and `-k`.
    tangent: [f64; 2],
}

/// Trace-class covariance on the retained lattice plus the diffusion
/// coefficient built on it.
///
/// Increments are stored per canonical half-lattice mode (`k2 > 0`, or
/// `k2 == 0 && k1 > 0`) as complex numbers `xi` with `E|xi|^2 = lambda_k dt`;
/// the noise field has coefficient `tau_k xi / L` at `k` and its conjugate at
/// `-k`, so `E |W(t)|_{L^2}^2 = t * sum_k lambda_k`.
#[derive(Clone, Debug)]
pub struct NoiseModel {
    grid: Grid,
    kind: NoiseKind,
    modes: Vec<NoiseMode>,
    trace_q: f64,
    k0: f64,
    k0_v: f64,
    k1: f64,
    l1: f64,
}

/// Power-law spectrum `lambda_k = amplitude |k|^{-2 exponent}` on the
/// retained lattice (`lambda_0 = 0`).
pub fn build_noise_model(grid: Grid, amplitude: f64, exponent: f64, kind: NoiseKind) -> Result<NoiseModel> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(invalid("amplitude", format!("must be finite and >= 0, got {amplitude}")));
    }
    if !(exponent.is_finite() && exponent >= 0.0) {
        return Err(invalid("exponent", format!("must be finite and >= 0, got {exponent}")));
    }
    NoiseModel::with_spectrum(grid, kind, |k1, k2| {
        if k1 == 0 && k2 == 0 {
            0.0
        } else {
            amplitude * ((k1 * k1 + k2 * k2) as f64).powf(-exponent)
        }
    })
}

impl NoiseModel {
    /// Builds a model from an arbitrary nonnegative spectrum evaluated on the
    /// retained lattice. The spectrum is read on the canonical half-lattice
    /// and mirrored, so `lambda(k) = lambda(-k)` holds by construction.
    pub fn with_spectrum(grid: Grid, kind: NoiseKind, spectrum: impl Fn(i64, i64) -> f64) -> Result<Self> {
        if let NoiseKind::ScalarMultiplicative { sigma, modulation } = kind {
            if !sigma.is_finite() {
                return Err(invalid("sigma", "must be finite"));
            }
            if let Modulation::Constant(c) = modulation {
                if !c.is_finite() {
                    return Err(invalid("modulation", "constant must be finite"));
                }
            }
        }
        let l0 = spectrum(0, 0);
        if l0 != 0.0 {
            return Err(invalid("spectrum", format!("lambda_0 must be 0, got {l0}")));
        }
        let c = grid.dealias_cutoff() as i64;
        let unit = grid.wavenumber_unit();
        let mut modes = Vec::new();
        for k2 in 0..=c {
            for k1 in -c..=c {
                if k2 == 0 && k1 <= 0 {
                    continue;
                }
                let lambda = spectrum(k1, k2);
                if !(lambda.is_finite() && lambda >= 0.0) {
                    return Err(invalid(
                        "spectrum",
                        format!("lambda({k1}, {k2}) = {lambda} is not finite and nonnegative"),
                    ));
                }
                let index = grid.index_of(k1, k2).expect("retained modes are on the lattice");
                let norm = ((k1 * k1 + k2 * k2) as f64).sqrt();
                modes.push(NoiseMode {
                    k: (k1, k2),
                    index,
                    conj_index: grid.conjugate_index(index),
                    lambda,
                    tangent: [-(k2 as f64) / norm, k1 as f64 / norm],
                });
            }
        }

        // Both members of each pair contribute lambda_k to the trace.
        let trace_q: f64 = modes.iter().map(|m| 2.0 * m.lambda).sum();
        let trace_v: f64 = modes
            .iter()
            .map(|m| {
                let kk = ((m.k.0 * m.k.0 + m.k.1 * m.k.1) as f64) * unit * unit;
                2.0 * m.lambda * (1.0 + kk)
            })
            .sum();
        let (scale_sq, lip_sq) = match kind {
            NoiseKind::Additive => (1.0, 0.0),
            NoiseKind::ScalarMultiplicative { sigma, modulation } => (
                sigma * sigma * modulation.sup_abs().powi(2),
                sigma * sigma * modulation.lipschitz().powi(2),
            ),
        };
        Ok(Self {
            grid,
            kind,
            modes,
            trace_q,
            k0: scale_sq * trace_q,
            k0_v: scale_sq * trace_v,
            k1: 0.0,
            l1: lip_sq * trace_q,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    /// `sum_k lambda_k` over the whole retained lattice.
    pub fn trace_q(&self) -> f64 {
        self.trace_q
    }

    /// Growth constant in `||G(u)||^2_{L2(K,H)} <= K0 + K1 |u|^2`.
    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// Growth constant for the `L2(K,V)` norm, `||G(u)||^2_{L2(K,V)} <= K0_V`.
    pub fn k0_v(&self) -> f64 {
        self.k0_v
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    /// Lipschitz constant in `||G(u) - G(v)||^2_{L2(K,H)} <= L1 |u - v|^2`.
    pub fn l1(&self) -> f64 {
        self.l1
    }

    /// Number of independent complex Brownian motions (half-lattice modes).
    pub fn n_noise_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_wavenumber(&self, m: usize) -> (i64, i64) {
        self.modes[m].k
    }

    pub fn mode_lambda(&self, m: usize) -> f64 {
        self.modes[m].lambda
    }

    /// Divergence-free noise field `Q^{1/2} dW` for one step's increments.
    pub fn noise_field(&self, dw: &[Complex64]) -> Result<SpectralField> {
        if dw.len() != self.modes.len() {
            return Err(Error::InvalidParameter {
                name: "increments",
                reason: format!("expected {} modes, got {}", self.modes.len(), dw.len()),
            });
        }
        let inv_l = 1.0 / self.grid.box_length();
        let mut coeffs: Vec<Mode> = vec![[Complex64::default(); 2]; self.grid.len()];
        for (m, xi) in self.modes.iter().zip(dw) {
            let z = xi * inv_l;
            let c = [z * m.tangent[0], z * m.tangent[1]];
            coeffs[m.index] = c;
            coeffs[m.conj_index] = [c[0].conj(), c[1].conj()];
        }
        Ok(SpectralField::from_coeffs_unchecked(self.grid, coeffs))
    }

    /// Scalar factor multiplying `Q^{1/2} dW` in `G(u) dW`.
    pub fn g_scale(&self, u: &SpectralField) -> f64 {
        match self.kind {
            NoiseKind::Additive => 1.0,
            NoiseKind::ScalarMultiplicative { sigma, modulation } => sigma * modulation.eval(u.l2_sq().sqrt()),
        }
    }

    /// `G(u) dW`.
    pub fn apply_g(&self, u: &SpectralField, dw: &[Complex64]) -> Result<SpectralField> {
        self.grid.ensure_same(u.grid())?;
        let field = self.noise_field(dw)?;
        Ok(match self.kind {
            NoiseKind::Additive => field,
            _ => field.scaled(self.g_scale(u)),
        })
    }
}

/// A diffusion coefficient `G(t, u)` acting on one step's increments.
///
/// The schemes call it with the left endpoint `t_{k-1}` of each step, which is
/// the hook for time-dependent coefficients; [`NoiseModel`] is autonomous.
pub trait Diffusion: Sync {
    fn grid(&self) -> &Grid;
    fn is_additive(&self) -> bool;
    fn apply(&self, t: f64, u: &SpectralField, dw: &[Complex64]) -> Result<SpectralField>;
}

impl Diffusion for NoiseModel {
    fn grid(&self) -> &Grid {
        &self.grid
    }

    fn is_additive(&self) -> bool {
        self.kind.is_additive()
    }

    fn apply(&self, _t: f64, u: &SpectralField, dw: &[Complex64]) -> Result<SpectralField> {
        self.apply_g(u, dw)
    }
}
