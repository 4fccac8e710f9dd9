use fewmode::config::preset;
use fewmode::geometry::{energy_of, thin_mirror_reflectivity, PotentialSpec, WaveKind};
use fewmode::modes::*;
use fewmode::run::compute_spectrum;
use fewmode::scattering::*;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn point(spec: &PotentialSpec, selector: &[usize], omega: f64) -> FewModePoint {
    let basis = dirichlet_modes(spec, (-0.5, 0.5), selector).unwrap();
    few_mode_point(spec, &basis, energy_of(omega), &BathOptions::default()).unwrap()
}

#[test]
fn empty_geometry_transmits_fully() {
    let spec = PotentialSpec::empty(WaveKind::Schroedinger);
    let s = transfer_matrix_oracle(&spec, 2.0, None).unwrap();
    assert!(s.distance(&SMatrix::exchange(2.0)) < 1e-15);
    let p = point(&spec, &[], 2.0);
    assert!(p.io.distance(&SMatrix::identity(p.io.energy)) < 1e-15);
    assert!(p.full.distance(&s) < 1e-12);
}

#[test]
fn single_delta_oracle() {
    let xi = 3.0;
    let mut spec = PotentialSpec::empty(WaveKind::Schroedinger);
    spec.deltas.push(fewmode::geometry::DeltaBarrier { position: 0.0, strength: xi });
    for k in [0.5, 1.0, 4.0, 9.0] {
        let s = transfer_matrix_oracle(&spec, energy_of(k), None).unwrap();
        assert!((s.transmission().norm_sqr() - k * k / (k * k + xi * xi)).abs() < 1e-14);
    }
}

#[test]
fn thin_mirror_oracle_reflectivity() {
    let mut spec = PotentialSpec::empty(WaveKind::MaxwellRwa);
    spec.deltas.push(fewmode::geometry::DeltaBarrier { position: 0.0, strength: 0.3 });
    for omega in [1.0, 10.0, 30.0] {
        let s = transfer_matrix_oracle(&spec, energy_of(omega), None).unwrap();
        assert!((s.reflection() - thin_mirror_reflectivity(0.3, omega)).norm() < 1e-14);
    }
}

#[test]
fn composition_with_identity() {
    let p = point(&PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, 10.0), &[1], 2.7);
    let id = SMatrix::identity(p.io.energy);
    assert!(s_full(&id, &p.io).unwrap().distance(&p.io) < 1e-15);
    assert!(s_full(&p.bg, &id).unwrap().distance(&p.bg) < 1e-15);
    assert!(s_full(&p.bg, &SMatrix::identity(p.io.energy + 1.0)).is_err());
}

#[test]
fn product_is_basis_independent_while_factors_are_not() {
    let spec = PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, 10.0);
    let omega = 5.9;
    let a = point(&spec, &[1], omega);
    let b = point(&spec, &[1, 2, 3], omega);
    assert!(a.full.distance(&b.full) < 1e-6);
    assert!(a.io.distance(&b.io) > 1e-3);
    assert!(a.bg.distance(&b.bg) > 1e-3);
}

#[test]
fn good_cavity_io_peak_sits_at_the_mode() {
    let spec = PotentialSpec::thin_mirror_cavity(1.0, 0.19);
    let grid: Vec<f64> = (0..401).map(|i| 7.5 * PI + PI * i as f64 / 400.0).collect();
    let (w, t) = grid
        .iter()
        .map(|&w| (w, point(&spec, &[8], w).io.transmission().norm_sqr()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!((w - 8.0 * PI).abs() < 0.5, "{w}");
    assert!(t > 0.99, "{t}");
}

#[test]
fn resonances_move_from_background_to_io() {
    let run = preset("double-delta-hundred-modes").unwrap().resolve().unwrap();
    let rows = compute_spectrum(&run).unwrap();
    let worst = rows
        .iter()
        .filter(|r| r.omega <= 99.5 * PI)
        .map(|r| (r.full.transmission().norm_sqr() - r.t_io().norm_sqr()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.02, "{worst}");
}

#[test]
fn dielectric_cavities_match_the_oracle() {
    let spec = PotentialSpec::double_cavity(4.0, 15.0, 0.01);
    for omega in [26.0, 27.9, 28.3, 29.5] {
        let p = point(&spec, &[9], omega);
        let oracle = transfer_matrix_oracle(&spec, energy_of(omega), None).unwrap();
        assert!(p.full.distance(&oracle) < 1e-6, "{omega}");
        assert!(p.full.unitarity_defect() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn few_mode_product_equals_oracle(
        k in 0.2f64..60.0,
        strength in 0.5f64..30.0,
        selector in proptest::collection::btree_set(1usize..20, 0..6),
    ) {
        let spec = PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, strength);
        let selector: Vec<usize> = selector.into_iter().collect();
        let p = point(&spec, &selector, k);
        let oracle = transfer_matrix_oracle(&spec, energy_of(k), None).unwrap();
        prop_assert!(p.full.distance(&oracle) < 1e-6);
        for s in [&p.full, &p.io, &p.bg] {
            prop_assert!(s.unitarity_defect() < 1e-8);
        }
        prop_assert!(p.full.reciprocity_defect() < 1e-8);
    }

    #[test]
    fn thin_mirror_cavity_matches_oracle(omega in 1.0f64..40.0, eta in 0.0f64..0.4, lambda in 1usize..13) {
        let spec = PotentialSpec::thin_mirror_cavity(1.0, eta);
        let p = point(&spec, &[lambda], omega);
        let oracle = transfer_matrix_oracle(&spec, energy_of(omega), None).unwrap();
        prop_assert!(p.full.distance(&oracle) < 1e-6);
        prop_assert!(p.io.unitarity_defect() < 1e-8);
    }
}

#[test]
fn smatrix_helpers() {
    let e = 1.0;
    let s = SMatrix::new(e, [[C64::new(0.0, 0.0), C64::new(1.0, 0.0)], [C64::new(0.0, 1.0), C64::new(0.0, 0.0)]]);
    assert_eq!(s.transmission(), C64::new(0.0, 1.0));
    assert!(s.unitarity_defect() < 1e-15);
    assert!(s.product(&SMatrix::identity(e)).distance(&s) < 1e-15);
}
