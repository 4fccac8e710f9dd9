use fewmode::geometry::{energy_of, PotentialSpec, WaveKind};
use fewmode::modes::*;
use fewmode::Error;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn double_delta() -> PotentialSpec {
    PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, 10.0)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn mode_frequency_and_center_value() {
    let basis = dirichlet_modes(&double_delta(), (-0.5, 0.5), &[8, 9]).unwrap();
    assert!((basis.modes[0].omega - 25.132741228718345).abs() < 1e-12);
    assert!((basis.modes[1].value_at(0.0).abs() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn modes_are_orthonormal_and_vanish_on_the_boundary() {
    let selector: Vec<usize> = (1..=12).collect();
    let basis = dirichlet_modes(&double_delta(), (-0.5, 0.5), &selector).unwrap();
    for (i, a) in basis.modes.iter().enumerate() {
        assert_eq!(a.value_at(-0.5), 0.0);
        assert_eq!(a.value_at(0.5), 0.0);
        for b in &basis.modes[i..] {
            let overlap = simpson(|r| a.value_at(r) * b.value_at(r), -0.5, 0.5, 4000);
            let expected = if a.index == b.index { 1.0 } else { 0.0 };
            assert!((overlap - expected).abs() < 1e-12, "{} {} {overlap}", a.index, b.index);
        }
    }
}

#[test]
fn boundary_slope_convention() {
    for lambda in 1..=6 {
        let m = SystemMode::new(lambda, (-0.5, 0.5));
        let (_, sb) = m.boundary_slopes();
        let sign = if lambda % 2 == 0 { 1.0 } else { -1.0 };
        assert!((sb - 2f64.sqrt() * m.omega * sign).abs() < 1e-12);
        let h = 1e-6;
        let fd = (m.value_at(0.5 - h) - m.value_at(0.5 - 2.0 * h)) / h;
        assert!((fd - sb).abs() < 1e-3 * m.omega);
    }
}

#[test]
fn empty_and_duplicate_selectors() {
    assert!(dirichlet_modes(&double_delta(), (-0.5, 0.5), &[]).unwrap().is_empty());
    assert!(matches!(dirichlet_modes(&double_delta(), (-0.5, 0.5), &[3, 3]), Err(Error::Validation(_))));
}

#[test]
fn green_kernel_examples() {
    let g = free_green_kernel(0.5, 0.3, 0.3).unwrap();
    assert!((g - C64::new(0.0, -1.0)).norm() < 1e-15);
    let k: f64 = 2.0;
    let g = free_green_kernel(0.5 * k * k, 0.0, PI / k).unwrap();
    assert!((g - C64::new(0.0, 1.0 / k)).norm() < 1e-14);
    assert!(free_green_kernel(0.0, 0.0, 0.0).is_err());
}

#[test]
fn green_kernel_inverts_e_minus_k() {
    let e = 3.0;
    let h = 1e-3;
    let rp = 0.1;
    let g = |r: f64| free_green_kernel(e, r, rp).unwrap();
    for r in [-0.7, -0.2, 0.4, 1.3] {
        let lap = (g(r + h) - 2.0 * g(r) + g(r - h)) / (h * h);
        let applied = g(r) * e + lap * 0.5;
        assert!(applied.norm() < 1e-5, "{applied}");
    }
    // The source strength is the slope jump of G times 1/2.
    let jump = (g(rp + h) - g(rp)) / h - (g(rp) - g(rp - h)) / h;
    assert!((jump * 0.5 - 1.0).norm() < 1e-2);
}

#[test]
fn empty_potential_without_modes_gives_free_waves() {
    let spec = PotentialSpec::empty(WaveKind::Schroedinger);
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[]).unwrap();
    let grid: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
    let opts = BathOptions { grid: grid.clone(), ..BathOptions::default() };
    let k = 2.3;
    let table = bath_states(&spec, &basis, energy_of(k), &opts).unwrap();
    for (r, s) in grid.iter().zip(&table.samples) {
        for ch in [Channel::Left, Channel::Right] {
            let free = FreeState { channel: ch, k }.value(*r);
            assert!((s[ch.index()] - free).norm() < 1e-13);
        }
    }
}

#[test]
fn bath_states_are_projected_and_flux_conserving() {
    let spec = double_delta();
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[1, 2, 3]).unwrap();
    for k in [0.4, 2.9, PI, 5.5, 2.0 * PI, 13.0] {
        let table = bath_states(&spec, &basis, energy_of(k), &BathOptions::default()).unwrap();
        assert!(table.q_residual < 1e-8, "k = {k}: {}", table.q_residual);
        assert!(table.flux_defect < 1e-6, "k = {k}: {}", table.flux_defect);
    }
}

#[test]
fn mirror_symmetry_of_bath_states() {
    let spec = double_delta();
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[1, 2]).unwrap();
    let bath = ExactBath::new(&spec, &basis, C64::new(energy_of(4.1), 0.0)).unwrap();
    for i in 0..41 {
        let r = -1.0 + 0.05 * i as f64;
        let a = bath.psi_tilde(Channel::Left, r);
        let b = bath.psi_tilde(Channel::Right, -r);
        assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()), "r = {r}");
    }
}

#[test]
fn nystrom_converges_to_exact_at_second_order() {
    let spec = double_delta();
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[1]).unwrap();
    let e = energy_of(2.2);
    let exact = bath_states(&spec, &basis, e, &BathOptions::default()).unwrap();
    let err = |points: usize| {
        let opts = BathOptions { solver: BathSolver::Nystrom { points }, q_tolerance: 1e-2, ..BathOptions::default() };
        let t = bath_states(&spec, &basis, e, &opts).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((t.boundary[i][j] - exact.boundary[i][j]).norm());
            }
        }
        worst
    };
    let (e1, e2, e3) = (err(100), err(200), err(400));
    assert!(e3 < 1e-3, "{e3}");
    assert!(e1 / e2 > 3.0 && e2 / e3 > 3.0, "{e1} {e2} {e3}");
}

#[test]
fn nonpositive_energy_is_rejected() {
    let spec = double_delta();
    let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[1]).unwrap();
    assert!(matches!(bath_states(&spec, &basis, 0.0, &BathOptions::default()), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn q_orthogonality_holds_for_random_bases(
        k in 0.2f64..40.0,
        strength in 0.5f64..30.0,
        selector in proptest::collection::btree_set(1usize..15, 0..5),
    ) {
        let spec = PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, strength);
        let selector: Vec<usize> = selector.into_iter().collect();
        let basis = dirichlet_modes(&spec, (-0.5, 0.5), &selector).unwrap();
        let table = bath_states(&spec, &basis, energy_of(k), &BathOptions::default()).unwrap();
        prop_assert!(table.q_residual < 1e-8);
        prop_assert!(table.flux_defect < 1e-6);
    }
}
