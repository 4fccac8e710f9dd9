use fewmode::geometry::*;
use fewmode::Error;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn vacuum_and_delta_only_potentials_vanish() {
    let vac = PotentialSpec::empty(WaveKind::MaxwellRwa);
    assert_eq!(potential_value(&vac, 0.1, 3.0).unwrap(), 0.0);
    let dd = PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, 10.0);
    assert_eq!(potential_value(&dd, 0.2, 7.0).unwrap(), 0.0);
}

#[test]
fn dielectric_layer_value() {
    let mut spec = PotentialSpec::empty(WaveKind::MaxwellRwa);
    spec.layers.push(Layer::new(-0.25, 0.25, 4.0));
    assert!((potential_value(&spec, 0.0, 2.0).unwrap() + 30.0).abs() < 1e-12);
}

#[test]
fn sampling_a_delta_is_a_domain_error() {
    let spec = PotentialSpec::thin_mirror_cavity(1.0, 0.2);
    assert!(matches!(potential_value(&spec, 0.5, 1.0), Err(Error::Domain(_))));
}

#[test]
fn reflectivity_examples() {
    assert_eq!(thin_mirror_reflectivity(0.0, 5.0), Complex64::new(0.0, 0.0));
    let r = thin_mirror_reflectivity(1.0, 2.0);
    assert!((r - Complex64::new(-0.5, 0.5)).norm() < 1e-15);
    let r = thin_mirror_reflectivity(1e9, 1e9);
    assert!((r + 1.0).norm() < 1e-12);
}

#[test]
fn dispersion_examples() {
    let d = dispersion(WaveKind::Schroedinger, SpectralInput::Wavenumber(2.0)).unwrap();
    assert_eq!((d.energy, d.omega), (2.0, 2.0));
    let d = dispersion(WaveKind::MaxwellRwa, SpectralInput::Frequency(8.0 * std::f64::consts::PI)).unwrap();
    assert!((d.energy - 32.0 * std::f64::consts::PI.powi(2)).abs() < 1e-10);
    let d = dispersion(WaveKind::Schroedinger, SpectralInput::Energy(0.5)).unwrap();
    assert!((d.k - 1.0).abs() < 1e-15);
    assert!(dispersion(WaveKind::Schroedinger, SpectralInput::Energy(-1.0)).is_err());
    assert!(dispersion(WaveKind::Schroedinger, SpectralInput::Wavenumber(0.0)).is_err());
}

#[test]
fn double_cavity_layout() {
    let spec = PotentialSpec::double_cavity(4.0, 15.0, 0.01);
    spec.validate().unwrap();
    assert_eq!(spec.layers.len(), 3);
    assert_eq!(spec.index_at(0.0), 1.0);
    assert_eq!(spec.index_at(0.505), 15.0);
    assert_eq!(spec.index_at(-0.505), 4.0);
    assert_eq!(spec.index_at(1.515), 4.0);
}

fn geometries() -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        (0.1f64..20.0).prop_map(|x| PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, x)),
        (0.0f64..1.0).prop_map(|eta| PotentialSpec::thin_mirror_cavity(1.0, eta)),
        (1.0f64..6.0, 1.0f64..20.0).prop_map(|(n0, nm)| PotentialSpec::double_cavity(n0, nm, 0.01)),
    ]
}

proptest! {
    #[test]
    fn potential_vanishes_outside_support(spec in geometries(), omega in 0.1f64..100.0) {
        let (a, b) = spec.support;
        for i in 0..1000 {
            let s = 1e-9 + 5.0 * i as f64 / 999.0;
            prop_assert_eq!(potential_value(&spec, a - s, omega).unwrap(), 0.0);
            prop_assert_eq!(potential_value(&spec, b + s, omega).unwrap(), 0.0);
        }
    }

    #[test]
    fn thin_mirror_conserves_energy(eta in 1e-4f64..10.0, omega in 1e-3f64..500.0) {
        let r = thin_mirror_reflectivity(eta, omega);
        let t = 1.0 + r;
        prop_assert!((r.norm_sqr() + t.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!(r.norm() < 1.0);
    }

    #[test]
    fn dispersion_round_trips(e in 1e-6f64..1e6) {
        let d = dispersion(WaveKind::Schroedinger, SpectralInput::Energy(e)).unwrap();
        let back = dispersion(WaveKind::Schroedinger, SpectralInput::Wavenumber(d.k)).unwrap();
        prop_assert!((back.energy - e).abs() <= 4.0 * f64::EPSILON * e);
        prop_assert!((d.omega - d.k).abs() == 0.0);
    }
}
