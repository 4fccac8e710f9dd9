use fewmode::geometry::{energy_of, PotentialSpec, WaveKind};
use fewmode::modes::*;
use fewmode::projection::*;
use nalgebra as na;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn double_delta() -> PotentialSpec {
    PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, 10.0)
}

fn row_at(spec: &PotentialSpec, basis: &SystemBasis, k: f64) -> (CouplingRow, LevelShiftMatrix) {
    let bath = bath_states(spec, basis, energy_of(k), &BathOptions::default()).unwrap();
    (couplings(basis, &bath).unwrap(), gamma_from_bath(basis, &bath))
}

fn rel_frobenius(a: &na::DMatrix<C64>, b: &na::DMatrix<C64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn empty_basis_gives_empty_objects() {
    let spec = double_delta();
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[]).unwrap();
    let (row, gamma) = row_at(&spec, &basis, 3.0);
    assert!(row.is_empty());
    assert_eq!(gamma.gamma.nrows(), 0);
    assert!(d_matrix(4.5, &basis, &gamma).unwrap().is_empty());
}

#[test]
fn coupling_sign_is_pinned() {
    let spec = double_delta();
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[1, 2]).unwrap();
    let (row, _) = row_at(&spec, &basis, 2.0);
    let expected = [
        C64::new(0.08387267749199244, 0.06446471741863147),
        C64::new(0.1548054997732389, 0.11728252892484609),
    ];
    assert!((row.values[0][0] - expected[0]).norm() < 1e-12);
    assert!((row.values[1][0] - expected[1]).norm() < 1e-12);
}

#[test]
fn channel_parity_of_couplings() {
    let spec = PotentialSpec::thin_mirror_cavity(1.0, 0.19);
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[7, 8, 9, 10]).unwrap();
    for omega in [22.0, 25.0, 28.5] {
        let (row, gamma) = row_at(&spec, &basis, omega);
        for (mode, w) in basis.modes.iter().zip(&row.values) {
            let combination = if mode.index % 2 == 1 { w[0] - w[1] } else { w[0] + w[1] };
            assert!(combination.norm() < 1e-12 * w[0].norm().max(1.0), "{} {w:?}", mode.index);
        }
        // Modes of opposite parity do not mix through the bath.
        assert!(gamma.gamma[(0, 1)].norm() < 1e-10 * gamma.gamma[(0, 0)].norm());
    }
}

#[test]
fn single_mode_d_is_scalar() {
    let spec = double_delta();
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[1]).unwrap();
    let e = energy_of(2.5);
    let (_, gamma) = row_at(&spec, &basis, 2.5);
    let d = d_matrix(e, &basis, &gamma).unwrap();
    let expected = C64::new(e - basis.modes[0].energy, 0.0) + gamma.gamma[(0, 0)];
    assert!((d.matrix[(0, 0)] - expected).norm() < 1e-14);
}

#[test]
fn vanishing_gamma_gives_diagonal_inverse() {
    let spec = double_delta();
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[1, 2, 3]).unwrap();
    let e = 0.3;
    let gamma = LevelShiftMatrix { energy: e, gamma: na::DMatrix::zeros(3, 3) };
    let inv = d_matrix(e, &basis, &gamma).unwrap().inverse().unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expected = if i == j { 1.0 / (e - basis.modes[i].energy) } else { 0.0 };
            assert!((inv[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-14);
        }
    }
}

#[test]
fn quadrature_of_vanishing_couplings() {
    let ks: Vec<f64> = (0..101).map(|i| 0.1 + 0.1 * i as f64).collect();
    let rows = ks
        .iter()
        .map(|&k| CouplingRow { energy: energy_of(k), selector: vec![1], values: vec![[C64::new(0.0, 0.0); 2]] })
        .collect();
    let table = CouplingTable {
        normalization: Normalization::Scattering,
        selector: vec![1],
        mode_length: 1.0,
        asymptote: None,
        wavenumbers: ks,
        rows,
    };
    let on_shell = CouplingRow { energy: energy_of(5.0), selector: vec![1], values: vec![[C64::new(0.0, 0.0); 2]] };
    let q = gamma_quadrature(&table, &on_shell).unwrap();
    assert_eq!(q.gamma.gamma[(0, 0)], C64::new(0.0, 0.0));
    let outside = CouplingRow { energy: energy_of(20.0), ..on_shell };
    assert!(gamma_quadrature(&table, &outside).is_err());
}

#[test]
fn green_and_quadrature_routes_agree() {
    let spec = double_delta();
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[1, 2]).unwrap();
    let table = coupling_table(&spec, &basis, 0.01, 60.0, 8001, &BathOptions::default()).unwrap();
    for k in [1.0, 2.5, 4.0, 6.0] {
        let (row, green) = row_at(&spec, &basis, k);
        let quad = gamma_quadrature(&table, &row).unwrap();
        assert!(rel_frobenius(&quad.gamma.gamma, &green.gamma) < 1e-4, "k = {k}");
        let direct = gamma_green(&spec, &basis, energy_of(k), &BathOptions::default()).unwrap();
        assert!(rel_frobenius(&direct.gamma, &green.gamma) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn width_is_positive_and_on_shell(
        k in 0.3f64..30.0,
        strength in 0.5f64..30.0,
        selector in proptest::collection::btree_set(1usize..12, 1..5),
    ) {
        let spec = PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, strength);
        let selector: Vec<usize> = selector.into_iter().collect();
        let basis = dirichlet_modes(&spec, (-0.5, 0.5), &selector).unwrap();
        let (row, gamma) = row_at(&spec, &basis, k);
        prop_assert!(gamma.min_width_eigenvalue() > -1e-10);
        let width = gamma.gamma.map(|z| C64::new(z.im, 0.0));
        let pww = row.outer() * C64::new(std::f64::consts::PI, 0.0);
        prop_assert!((width - &pww).norm() <= 1e-6 * pww.norm().max(1e-12));
        // Real couplings up to a common phase make Γ symmetric.
        prop_assert!((&gamma.gamma - gamma.gamma.transpose()).norm() <= 1e-10 * gamma.gamma.norm());
    }
}
