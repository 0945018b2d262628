use num_complex::Complex64;

use super::params::{SchemeParams, StepDiagnostics};
use super::solver::picard;
use super::energy_defect;
use crate::error::Result;
use crate::noise::Diffusion;
use crate::spectral::{bilinear_b, norm_bundle, SpectralField};

/// One step of the fully implicit scheme: finds `u` with
/// `u - u_prev + dt [nu A u + B(u, u)] = G(t_{k-1}, u_prev) dW`.
///
/// `step` is the zero-based index of the step, so the step covers
/// `[step dt, (step + 1) dt]`.
pub fn implicit_euler_step<D: Diffusion + ?Sized>(
    u_prev: &SpectralField,
    step: usize,
    params: &SchemeParams,
    noise: &D,
    dw: &[Complex64],
) -> Result<(SpectralField, StepDiagnostics)> {
    let dt = params.dt();
    let g = noise.apply(step as f64 * dt, u_prev, dw)?;
    let rhs = u_prev + &g;
    let out = picard(
        &rhs,
        u_prev.clone(),
        params.viscosity * dt,
        dt,
        params.solver_tol,
        params.solver_max_iter,
        |u| {
            if params.advection {
                bilinear_b(u, u).map(Some)
            } else {
                Ok(None)
            }
        },
    )?;
    let diag = StepDiagnostics {
        solver_iterations: out.iterations,
        residual: out.residual,
        energy_defect: energy_defect(&out.state, u_prev, Some(&g), params.viscosity * dt),
        grad_l2: norm_bundle(&out.state).grad_l2,
    };
    Ok((out.state, diag))
}

/// One step of the semi-implicit scheme:
/// `v - v_prev + dt [nu A v + B(v_prev, v)] = G(t_{k-1}, v_prev) dW`, linear in `v`.
pub fn semi_implicit_step<D: Diffusion + ?Sized>(
    v_prev: &SpectralField,
    step: usize,
    params: &SchemeParams,
    noise: &D,
    dw: &[Complex64],
) -> Result<(SpectralField, StepDiagnostics)> {
    let dt = params.dt();
    let g = noise.apply(step as f64 * dt, v_prev, dw)?;
    let rhs = v_prev + &g;
    let out = picard(
        &rhs,
        v_prev.clone(),
        params.viscosity * dt,
        dt,
        params.solver_tol,
        params.solver_max_iter,
        |v| {
            if params.advection {
                bilinear_b(v_prev, v).map(Some)
            } else {
                Ok(None)
            }
        },
    )?;
    let diag = StepDiagnostics {
        solver_iterations: out.iterations,
        residual: out.residual,
        energy_defect: energy_defect(&out.state, v_prev, Some(&g), params.viscosity * dt),
        grad_l2: norm_bundle(&out.state).grad_l2,
    };
    Ok((out.state, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{build_noise_model, NoiseKind, NoiseModel};
    use crate::schemes::solver;
    use crate::schemes::SchemeKind;
    use crate::spectral::{leray_project, Grid, RawField};
    use std::f64::consts::PI;

    fn setup(amplitude: f64) -> (Grid, NoiseModel) {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let m = build_noise_model(g, amplitude, 2.0, NoiseKind::Additive).unwrap();
        (g, m)
    }

    fn params(kind: SchemeKind, n: usize) -> SchemeParams {
        SchemeParams::new(kind, 0.5, 1.0, n).unwrap()
    }

    fn zeros(m: &NoiseModel) -> Vec<Complex64> {
        vec![Complex64::default(); m.n_noise_modes()]
    }

    fn wavy(g: Grid) -> SpectralField {
        let mut raw = RawField::zeros(g);
        raw.set_mode(1, 2, [Complex64::new(0.3, -0.2), Complex64::new(0.1, 0.4)]).unwrap();
        raw.set_mode(-3, 1, [Complex64::new(-0.2, 0.1), Complex64::new(0.25, 0.05)]).unwrap();
        raw.set_mode(2, 0, [Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.3)]).unwrap();
        leray_project(&raw)
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let (g, m) = setup(1.0);
        let z = SpectralField::zeros(g);
        let (u, d) = implicit_euler_step(&z, 0, &params(SchemeKind::FullyImplicit, 4), &m, &zeros(&m)).unwrap();
        assert!(u.is_zero());
        assert_eq!(d.solver_iterations, 1);
        let (v, _) = semi_implicit_step(&z, 0, &params(SchemeKind::SemiImplicit, 4), &m, &zeros(&m)).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn stokes_only_step_is_the_resolvent() {
        let (g, m) = setup(1.0);
        let mut p = params(SchemeKind::FullyImplicit, 8);
        p.advection = false;
        let mut raw = RawField::zeros(g);
        let c = Complex64::new(0.7, -0.1);
        raw.set_mode(2, 1, [c * -1.0, c * 2.0]).unwrap();
        let u0 = leray_project(&raw);
        let (u, _) = implicit_euler_step(&u0, 0, &p, &m, &zeros(&m)).unwrap();
        let factor = 1.0 / (1.0 + 0.5 * (1.0 / 8.0) * 5.0);
        let got = u.coeff(2, 1).unwrap();
        assert!((got[0] - c * -factor).norm() < 1e-15);
        assert!((got[1] - c * (2.0 * factor)).norm() < 1e-15);
        let (v, _) = semi_implicit_step(&u0, 0, &p, &m, &zeros(&m)).unwrap();
        assert_eq!(u, v);
    }

    #[test]
    fn noiseless_energy_balance() {
        let (g, m) = setup(1.0);
        let u0 = wavy(g);
        for kind in [SchemeKind::FullyImplicit, SchemeKind::SemiImplicit] {
            let p = params(kind, 16);
            let step = if kind == SchemeKind::FullyImplicit { implicit_euler_step::<NoiseModel> } else { semi_implicit_step::<NoiseModel> };
            let (u, d) = step(&u0, 0, &p, &m, &zeros(&m)).unwrap();
            let lhs = u.l2_sq() + (&u - &u0).l2_sq() + 2.0 * p.viscosity * p.dt() * norm_bundle(&u).grad_l2.powi(2);
            let scale = 1.0 + norm_bundle(&u).v.powi(2);
            assert!((lhs - u0.l2_sq()).abs() <= 20.0 * p.solver_tol * scale, "{kind}: {}", lhs - u0.l2_sq());
            assert!(d.energy_defect <= 10.0 * p.solver_tol * scale);
            assert!(d.residual <= p.solver_tol);
            assert!(u.divergence_ratio() < 1e-13);
        }
    }

    #[test]
    fn noisy_energy_identity() {
        let (g, m) = setup(3.0);
        let u0 = wavy(g);
        let dw: Vec<Complex64> = (0..m.n_noise_modes())
            .map(|i| Complex64::new(0.05 * (i as f64).cos(), 0.05 * (i as f64 * 0.7).sin()))
            .collect();
        for kind in [SchemeKind::FullyImplicit, SchemeKind::SemiImplicit] {
            let p = params(kind, 16);
            let (u, d) = if kind == SchemeKind::FullyImplicit {
                implicit_euler_step(&u0, 3, &p, &m, &dw).unwrap()
            } else {
                semi_implicit_step(&u0, 3, &p, &m, &dw).unwrap()
            };
            assert!(d.energy_defect <= 10.0 * p.solver_tol * (1.0 + norm_bundle(&u).v.powi(2)));
            assert!(u.is_dealiased());
        }
    }

    #[test]
    fn picard_residuals_decrease() {
        let (g, _) = setup(1.0);
        let u0 = wavy(g).scaled(2.0);
        let dt = 0.05;
        let out = solver::picard(&u0, u0.clone(), 0.5 * dt, dt, 1e-12, 200, |u| bilinear_b(u, u).map(Some)).unwrap();
        assert!(out.history.len() > 3);
        for w in out.history[1..].windows(2) {
            assert!(w[1] <= w[0], "{:?}", out.history);
        }
    }

    #[test]
    fn oversized_step_is_reported() {
        let (g, m) = setup(1.0);
        let u0 = wavy(g).scaled(200.0);
        let mut p = SchemeParams::new(SchemeKind::FullyImplicit, 1e-3, 10.0, 1).unwrap();
        p.solver_max_iter = 30;
        let err = implicit_euler_step(&u0, 0, &p, &m, &zeros(&m)).unwrap_err();
        assert!(matches!(err, crate::Error::NonConvergence { .. }), "{err}");
    }
}
