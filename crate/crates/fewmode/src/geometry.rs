//! Potentials, dielectric geometries and unit conventions.
//!
//! Units: ħ = m = c = 1, so E = k²/2 and ω = k for every wave kind.
//! Delta barriers are symbolic and are never sampled on a grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positions closer than this are treated as coincident.
pub const POSITION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveKind {
    Schroedinger,
    MaxwellRwa,
    Sve,
}

impl WaveKind {
    /// True when projections use the ε-weighted inner product.
    pub fn is_weighted(self) -> bool {
        !matches!(self, WaveKind::Schroedinger)
    }

    pub fn is_maxwell(self) -> bool {
        self.is_weighted()
    }
}

/// A delta barrier. `strength` is ξ (1/length) for Schrödinger, η (length) for Maxwell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaBarrier {
    pub position: f64,
    pub strength: f64,
}

/// A homogeneous dielectric slab on [start, end].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub start: f64,
    pub end: f64,
    pub index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl Layer {
    pub fn new(start: f64, end: f64, index: f64) -> Self {
        Layer { start, end, index, name: None }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub wave_kind: WaveKind,
    #[serde(default)]
    pub layers: Vec<Layer>,
    #[serde(default)]
    pub deltas: Vec<DeltaBarrier>,
    pub support: (f64, f64),
}

impl PotentialSpec {
    pub fn empty(wave_kind: WaveKind) -> Self {
        PotentialSpec { wave_kind, layers: Vec::new(), deltas: Vec::new(), support: (-0.5, 0.5) }
    }

    /// Two equal delta barriers at ±L/2.
    pub fn double_delta(wave_kind: WaveKind, length: f64, strength: f64) -> Self {
        let h = 0.5 * length;
        PotentialSpec {
            wave_kind,
            layers: Vec::new(),
            deltas: vec![
                DeltaBarrier { position: -h, strength },
                DeltaBarrier { position: h, strength },
            ],
            support: (-h, h),
        }
    }

    /// Thin-mirror Fabry-Perot cavity of length L with mirror parameter η.
    pub fn thin_mirror_cavity(length: f64, eta: f64) -> Self {
        Self::double_delta(WaveKind::MaxwellRwa, length, eta)
    }

    /// Two coupled dielectric cavities of unit length separated by a thin slab.
    ///
    /// Outer mirrors have index `n_outer`, the middle one `n_mid`, all of thickness `t`.
    /// The first cavity occupies [-1/2, 1/2].
    pub fn double_cavity(n_outer: f64, n_mid: f64, t: f64) -> Self {
        let layers = vec![
            Layer::new(-0.5 - t, -0.5, n_outer).named("left"),
            Layer::new(0.5, 0.5 + t, n_mid).named("mid"),
            Layer::new(1.5 + t, 1.5 + 2.0 * t, n_outer).named("right"),
        ];
        PotentialSpec {
            wave_kind: WaveKind::MaxwellRwa,
            layers,
            deltas: Vec::new(),
            support: (-0.5 - t, 1.5 + 2.0 * t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.support;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::config("geometry.support", "support must be a finite interval with start < end"));
        }
        let mut layers: Vec<&Layer> = self.layers.iter().collect();
        layers.sort_by(|x, y| x.start.total_cmp(&y.start));
        for (i, l) in layers.iter().enumerate() {
            let path = format!("geometry.layers[{i}]");
            if !(l.start.is_finite() && l.end.is_finite() && l.width() > 0.0) {
                return Err(Error::config(&path, "layer must have positive width"));
            }
            if !(l.index.is_finite() && l.index >= 1.0) {
                return Err(Error::config(&path, "refractive index must be >= 1"));
            }
            if l.start < a - POSITION_TOL || l.end > b + POSITION_TOL {
                return Err(Error::config(&path, "layer lies outside the support"));
            }
            if self.wave_kind == WaveKind::Schroedinger && l.index != 1.0 {
                return Err(Error::config(&path, "dielectric layers require a Maxwell wave kind"));
            }
            if i > 0 && l.start < layers[i - 1].end - POSITION_TOL {
                return Err(Error::config(&path, "layers overlap"));
            }
        }
        for (i, d) in self.deltas.iter().enumerate() {
            let path = format!("geometry.deltas[{i}]");
            if !(d.position.is_finite() && d.strength.is_finite()) {
                return Err(Error::config(&path, "non-finite delta barrier"));
            }
            if d.strength < 0.0 {
                return Err(Error::config(&path, "delta strength must be non-negative"));
            }
            if d.position < a - POSITION_TOL || d.position > b + POSITION_TOL {
                return Err(Error::config(&path, "delta barrier lies outside the support"));
            }
        }
        Ok(())
    }

    /// Relative permittivity ε(r) = n(r)² away from layer edges.
    pub fn epsilon(&self, r: f64) -> f64 {
        let n = self.index_at(r);
        n * n
    }

    /// Refractive index at r; layer edges count as inside the layer.
    pub fn index_at(&self, r: f64) -> f64 {
        self.layers
            .iter()
            .find(|l| r >= l.start && r <= l.end)
            .map_or(1.0, |l| l.index)
    }

    /// True when r is (numerically) the position of a delta barrier.
    pub fn is_delta_position(&self, r: f64) -> bool {
        self.deltas.iter().any(|d| (d.position - r).abs() <= POSITION_TOL)
    }

    /// Schrödinger-equivalent delta strength of a barrier at energy E.
    ///
    /// A thin Maxwell mirror ε = 1 + η δ(r) acts as the energy dependent barrier −ηE.
    pub fn effective_delta_strength(&self, barrier: &DeltaBarrier, energy: Complex64) -> Complex64 {
        match self.wave_kind {
            WaveKind::Schroedinger => Complex64::new(barrier.strength, 0.0),
            WaveKind::MaxwellRwa | WaveKind::Sve => -barrier.strength * energy,
        }
    }

    /// Piecewise-constant description of the wave equation at a (possibly complex) energy.
    pub fn profile(&self, energy: Complex64) -> Profile {
        self.profile_with_extra(energy, &[])
    }

    /// Like [`PotentialSpec::profile`] with additional Schrödinger-equivalent deltas.
    pub fn profile_with_extra(&self, energy: Complex64, extra: &[(f64, Complex64)]) -> Profile {
        let k = (2.0 * energy).sqrt();
        let mut points: Vec<f64> = Vec::new();
        for l in &self.layers {
            points.push(l.start);
            points.push(l.end);
        }
        points.extend(self.deltas.iter().map(|d| d.position));
        points.extend(extra.iter().map(|e| e.0));
        points.sort_by(f64::total_cmp);
        points.dedup_by(|x, y| (*x - *y).abs() <= POSITION_TOL);

        let mut interfaces = Vec::with_capacity(points.len());
        for (i, &x) in points.iter().enumerate() {
            let mut xi = Complex64::new(0.0, 0.0);
            for d in &self.deltas {
                if (d.position - x).abs() <= POSITION_TOL {
                    xi += self.effective_delta_strength(d, energy);
                }
            }
            for &(pos, s) in extra {
                if (pos - x).abs() <= POSITION_TOL {
                    xi += s;
                }
            }
            let probe = match points.get(i + 1) {
                Some(&next) => 0.5 * (x + next),
                None => x + 1.0,
            };
            let q = k * self.index_at(probe);
            interfaces.push(Interface { position: x, xi, q_right: q });
        }
        Profile { energy, k, interfaces }
    }
}

/// A point where the local wavenumber changes and/or a delta barrier sits.
#[derive(Clone, Copy, Debug)]
pub struct Interface {
    pub position: f64,
    /// Schrödinger-equivalent delta strength: ψ' jumps by 2ξψ.
    pub xi: Complex64,
    /// Local wavenumber to the right of this interface.
    pub q_right: Complex64,
}

/// Piecewise-constant wave equation ψ'' + q(r)²ψ = 2Σξ δ(r − x)ψ.
#[derive(Clone, Debug)]
pub struct Profile {
    pub energy: Complex64,
    pub k: Complex64,
    pub interfaces: Vec<Interface>,
}

impl Profile {
    pub fn region_count(&self) -> usize {
        self.interfaces.len() + 1
    }

    /// Wavenumber of region j (region 0 is left of every interface).
    pub fn region_q(&self, j: usize) -> Complex64 {
        if j == 0 {
            self.k
        } else {
            self.interfaces[j - 1].q_right
        }
    }

    /// Region containing r; a point on an interface belongs to the region on its left.
    pub fn region_of(&self, r: f64) -> usize {
        self.interfaces.partition_point(|i| i.position < r)
    }
}

/// Smooth part of the potential; deltas are excluded and must be handled symbolically.
pub fn potential_value(spec: &PotentialSpec, r: f64, omega: f64) -> Result<f64> {
    if spec.is_delta_position(r) {
        return Err(Error::domain(format!("potential sampled at delta barrier position r = {r}")));
    }
    Ok(match spec.wave_kind {
        WaveKind::Schroedinger => 0.0,
        WaveKind::MaxwellRwa | WaveKind::Sve => (1.0 - spec.epsilon(r)) * 0.5 * omega * omega,
    })
}

/// Reflectivity of a thin mirror, r(ω) = iωη/(2 − iωη).
pub fn thin_mirror_reflectivity(eta: f64, omega: f64) -> Complex64 {
    let z = Complex64::new(0.0, omega * eta);
    z / (2.0 - z)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralInput {
    Energy(f64),
    Wavenumber(f64),
    Frequency(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub energy: f64,
    pub omega: f64,
    pub k: f64,
}

/// Consistent (E, ω, k) triple with E = k²/2 and ω = √(2E).
pub fn dispersion(_wave_kind: WaveKind, input: SpectralInput) -> Result<Dispersion> {
    let k = match input {
        SpectralInput::Energy(e) if e > 0.0 => (2.0 * e).sqrt(),
        SpectralInput::Wavenumber(k) | SpectralInput::Frequency(k) if k > 0.0 => k,
        _ => return Err(Error::domain(format!("dispersion needs a positive argument, got {input:?}"))),
    };
    Ok(Dispersion { energy: 0.5 * k * k, omega: k, k })
}

/// Energy of a positive angular frequency or wavenumber.
pub fn energy_of(omega: f64) -> f64 {
    0.5 * omega * omega
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_potential_value() {
        let mut spec = PotentialSpec::empty(WaveKind::MaxwellRwa);
        spec.layers.push(Layer::new(-0.1, 0.1, 4.0));
        assert_eq!(potential_value(&spec, 0.0, 2.0).unwrap(), -30.0);
        assert_eq!(potential_value(&spec, 0.3, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn reflectivity_values() {
        assert_eq!(thin_mirror_reflectivity(0.0, 3.0), Complex64::new(0.0, 0.0));
        let r = thin_mirror_reflectivity(1.0, 2.0);
        assert!((r - Complex64::new(-0.5, 0.5)).norm() < 1e-15);
        let r = thin_mirror_reflectivity(1e12, 1e6);
        assert!((r + 1.0).norm() < 1e-12);
    }

    #[test]
    fn dispersion_values() {
        let d = dispersion(WaveKind::MaxwellRwa, SpectralInput::Wavenumber(2.0)).unwrap();
        assert_eq!((d.energy, d.omega), (2.0, 2.0));
        let w = 8.0 * std::f64::consts::PI;
        let d = dispersion(WaveKind::MaxwellRwa, SpectralInput::Frequency(w)).unwrap();
        assert!((d.energy - 32.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
        let d = dispersion(WaveKind::Schroedinger, SpectralInput::Energy(0.5)).unwrap();
        assert_eq!(d.k, 1.0);
        assert!(dispersion(WaveKind::Schroedinger, SpectralInput::Energy(0.0)).is_err());
    }

    #[test]
    fn delta_position_is_domain_error() {
        let spec = PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, 10.0);
        assert!(potential_value(&spec, 0.5, 1.0).is_err());
    }

    #[test]
    fn profile_merges_coincident_points() {
        let mut spec = PotentialSpec::double_cavity(4.0, 2.0, 0.01);
        spec.deltas.push(DeltaBarrier { position: 0.5, strength: 0.1 });
        let p = spec.profile(Complex64::new(2.0, 0.0));
        assert_eq!(p.interfaces.len(), 6);
        assert_eq!(p.region_q(2), Complex64::new(2.0, 0.0));
        assert_eq!(p.region_q(3), Complex64::new(4.0, 0.0));
        assert!((p.interfaces[2].xi - Complex64::new(-0.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn validation_rejects_overlap_and_outside() {
        let mut spec = PotentialSpec::double_cavity(4.0, 2.0, 0.01);
        spec.layers.push(Layer::new(0.505, 0.6, 2.0));
        assert!(spec.validate().is_err());
        let mut spec = PotentialSpec::double_delta(WaveKind::Schroedinger, 1.0, 1.0);
        spec.deltas.push(DeltaBarrier { position: 2.0, strength: 1.0 });
        assert!(spec.validate().is_err());
    }
}
