use std::f64::consts::PI;

use proptest::prelude::*;
use sns_core::harness::random_smooth_field;
use sns_core::noise::{build_noise_model, read_path, sample_wiener_path, write_path, NoiseKind};
use sns_core::spectral::{bilinear_b, leray_project, norm_bundle, read_snapshot, trilinear_form, write_snapshot, Grid, RawField};
use sns_core::theory::{gn_ratio, localization_indicator, Localization};
use sns_core::{SchemeKind, SchemeParams};

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (prop::sample::select(vec![8usize, 12, 16, 24]), 0.5f64..10.0).prop_map(|(n, l)| Grid::new(n, l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn snapshots_round_trip_bit_exactly(g in grid_strategy(), decay in 0.0f64..3.0, amp in 0.0f64..5.0, seed: u64) {
        let u = random_smooth_field(g, decay, amp, seed);
        let mut buf = Vec::new();
        write_snapshot(&u, &mut buf).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        prop_assert_eq!(back, u);
    }

    #[test]
    fn paths_round_trip_bit_exactly(seed: u64, n in 1usize..40) {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let m = build_noise_model(g, 1.0, 1.0, NoiseKind::Additive).unwrap();
        let p = sample_wiener_path(&m, 0.5, n, seed).unwrap();
        let mut buf = Vec::new();
        write_path(&p, &mut buf).unwrap();
        prop_assert_eq!(read_path(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn random_fields_satisfy_the_field_invariants(g in grid_strategy(), decay in 0.0f64..3.0, seed: u64) {
        let u = random_smooth_field(g, decay, 1.0, seed);
        prop_assert!(u.is_dealiased());
        prop_assert!(u.divergence_ratio() <= 1e-13);
        prop_assert_eq!(u.hermitian_defect(), 0.0);
        prop_assert!(u.coeff(0, 0).unwrap().iter().all(|c| c.norm() == 0.0));
        let nb = norm_bundle(&u);
        prop_assert!((nb.v * nb.v - nb.l2 * nb.l2 - nb.grad_l2 * nb.grad_l2).abs() <= 1e-12 * nb.v * nb.v);
        prop_assert!(nb.grad_l2 <= nb.stokes_l2 * g.box_length() / (2.0 * PI) * (1.0 + 1e-12));
        let again = leray_project(&RawField::from_coeffs(g, u.coeffs().to_vec()).unwrap());
        prop_assert!((&again - &u).l2_sq().sqrt() <= 1e-13 * u.l2_sq().sqrt());
    }

    #[test]
    fn advection_is_antisymmetric(g in grid_strategy(), seeds in any::<[u64; 3]>()) {
        let u = random_smooth_field(g, 1.0, 1.0, seeds[0]);
        let v = random_smooth_field(g, 1.5, 1.0, seeds[1]);
        let w = random_smooth_field(g, 0.5, 1.0, seeds[2]);
        let a = trilinear_form(&u, &v, &w).unwrap();
        let b = trilinear_form(&u, &w, &v).unwrap();
        let scale = norm_bundle(&u).l4 * norm_bundle(&v).grad_l2.max(norm_bundle(&w).grad_l2) * 10.0;
        prop_assert!((a + b).abs() <= 1e-12 * scale);
        prop_assert!(bilinear_b(&u, &u).unwrap().inner(&u).abs() <= 1e-12 * scale);
    }

    #[test]
    fn interpolation_ratio_is_scale_free(seed: u64, s in 0.01f64..100.0) {
        let g = Grid::new(16, 2.0 * PI).unwrap();
        let u = random_smooth_field(g, 1.0, 1.0, seed);
        let r = gn_ratio(&u);
        prop_assert!((gn_ratio(&u.scaled(s)) - r).abs() <= 1e-12 * r);
    }

    #[test]
    fn localization_sets_are_nested(seed: u64, m in 0.0f64..3.0) {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let model = build_noise_model(g, 2.0, 1.0, NoiseKind::Additive).unwrap();
        let path = sample_wiener_path(&model, 1.0, 16, seed).unwrap();
        let p = SchemeParams::new(SchemeKind::SemiImplicit, 0.2, 1.0, 16).unwrap();
        let rec = sns_core::schemes::run_trajectory(&random_smooth_field(g, 1.0, 0.5, seed), &p, &model, &path).unwrap();
        for variant in [Localization::GradSup, Localization::XNormSup] {
            let ind = localization_indicator(&rec, m, variant);
            prop_assert_eq!(ind.len(), 17);
            prop_assert!(ind.windows(2).all(|w| w[0] || !w[1]));
            prop_assert!(localization_indicator(&rec, f64::INFINITY, variant).iter().all(|&b| b));
        }
    }
}
