//! Scattering matrices and the transfer-matrix oracle.
//!
//! Channel convention: row/column 0 is the left lead, 1 the right lead, so that
//! S = [[r, t'], [t, r']] and S[1][0] is the left-to-right transmission amplitude.
//! The resonant factor S_io acts between bath channels labeled by their incident
//! lead and is the identity without system modes. The background factor carries the
//! lead reordering, so an empty geometry gives S_bg = [[0, 1], [1, 0]].

use nalgebra as na;

use crate::error::{Error, Result};
use crate::geometry::{thin_mirror_reflectivity, PotentialSpec, WaveKind, POSITION_TOL};
use crate::modes::{bath_states, BathOptions, BathStateTable, Channel, SystemBasis};
use crate::numerics::*;
use crate::projection::{couplings, d_matrix, gamma_from_bath, CouplingRow, DMatrix, LevelShiftMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SMatrix {
    pub energy: f64,
    pub entries: Mat2,
}

impl SMatrix {
    pub fn new(energy: f64, entries: Mat2) -> Self {
        SMatrix { energy, entries }
    }

    pub fn identity(energy: f64) -> Self {
        SMatrix::new(energy, mat2_identity())
    }

    /// The lead exchange [[0, 1], [1, 0]].
    pub fn exchange(energy: f64) -> Self {
        SMatrix::new(energy, [[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn transmission(&self) -> C64 {
        self.entries[1][0]
    }

    pub fn reflection(&self) -> C64 {
        self.entries[0][0]
    }

    /// ‖S†S − I‖_F.
    pub fn unitarity_defect(&self) -> f64 {
        let p = mat2_mul(&mat2_adjoint(&self.entries), &self.entries);
        mat2_frobenius(&mat2_sub(&p, &mat2_identity()))
    }

    /// ‖S − other‖_F.
    pub fn distance(&self, other: &SMatrix) -> f64 {
        mat2_frobenius(&mat2_sub(&self.entries, &other.entries))
    }

    pub fn reciprocity_defect(&self) -> f64 {
        (self.entries[0][1] - self.entries[1][0]).norm()
    }

    pub fn product(&self, rhs: &SMatrix) -> SMatrix {
        SMatrix::new(self.energy, mat2_mul(&self.entries, &rhs.entries))
    }
}

/// S_io = I − 2πi W†D⁻¹W between bath channels.
pub fn s_io(w_row: &CouplingRow, d: &DMatrix) -> Result<SMatrix> {
    check_energy(w_row.energy, d.energy)?;
    if w_row.len() != d.len() {
        return Err(Error::validation("coupling row and D-matrix sizes differ"));
    }
    let mut s = mat2_identity();
    if w_row.is_empty() {
        return Ok(SMatrix::new(w_row.energy, s));
    }
    let w = w_row.matrix();
    let x = d.solve(&w)?;
    let prod = w.adjoint() * x;
    for m in 0..2 {
        for mp in 0..2 {
            s[m][mp] -= 2.0 * std::f64::consts::PI * I * prod[(m, mp)];
        }
    }
    Ok(SMatrix::new(w_row.energy, s))
}

/// Reduced background T-matrix T_bg = ⟨k|V|ψ̃⟩ − Σ_λ ⟨k|χ_λ⟩ W_λ, indexed [m][m'].
pub fn t_bg(basis: &SystemBasis, bath: &BathStateTable, w_row: &CouplingRow) -> Result<Mat2> {
    check_energy(w_row.energy, bath.energy)?;
    let mut t = bath.v_elements;
    for (mode, w) in basis.modes.iter().zip(&w_row.values) {
        for bra in Channel::BOTH {
            let ov = mode.free_overlap(bra, bath.k);
            for ket in Channel::BOTH {
                t[bra.index()][ket.index()] -= ov * w[ket.index()];
            }
        }
    }
    Ok(t)
}

/// S_bg in lead order: the plane-wave matrix I − 2πi T_bg with its rows exchanged.
pub fn s_bg(_spec: &PotentialSpec, basis: &SystemBasis, bath: &BathStateTable, w_row: &CouplingRow) -> Result<SMatrix> {
    let t = t_bg(basis, bath, w_row)?;
    let two_pi_i = 2.0 * std::f64::consts::PI * I;
    let pw = [
        [ONE - two_pi_i * t[0][0], -two_pi_i * t[0][1]],
        [-two_pi_i * t[1][0], ONE - two_pi_i * t[1][1]],
    ];
    Ok(SMatrix::new(bath.energy, [pw[1], pw[0]]))
}

pub fn s_full(bg: &SMatrix, io: &SMatrix) -> Result<SMatrix> {
    check_energy(bg.energy, io.energy)?;
    Ok(bg.product(io))
}

fn check_energy(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
        return Err(Error::validation(format!("energy mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// Element of the layered geometry seen by the oracle.
enum OracleElement {
    Interface { q_left: C64, q_right: C64 },
    Mirror { r: C64, t: C64 },
}

fn element_matrix(e: &OracleElement) -> Mat2 {
    match *e {
        OracleElement::Interface { q_left, q_right } => {
            let s = 0.5 / q_right;
            [[(q_right + q_left) * s, (q_right - q_left) * s], [(q_right - q_left) * s, (q_right + q_left) * s]]
        }
        OracleElement::Mirror { r, t } => [[t - r * r / t, r / t], [-r / t, ONE / t]],
    }
}

/// Symmetric point-scatterer amplitudes of a delta ψ'' jump 2ξψ in a medium of wavenumber q.
fn delta_amplitudes(xi: C64, q: C64) -> (C64, C64) {
    let den = q + I * xi;
    (-I * xi / den, q / den)
}

/// Exact S-matrix of the layered geometry by composing 2×2 transfer matrices.
///
/// `atom_layer` is an extra thin layer (position, η) with ε → ε + η δ(r − position).
pub fn transfer_matrix_oracle(spec: &PotentialSpec, energy: f64, atom_layer: Option<(f64, C64)>) -> Result<SMatrix> {
    if !(energy > 0.0) {
        return Err(Error::domain(format!("oracle needs E > 0, got {energy}")));
    }
    spec.validate()?;
    let k = (2.0 * energy).sqrt();
    let omega = k;

    let mut points: Vec<f64> = spec.layers.iter().flat_map(|l| [l.start, l.end]).collect();
    points.extend(spec.deltas.iter().map(|d| d.position));
    if let Some((x, _)) = atom_layer {
        points.push(x);
    }
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= POSITION_TOL);

    let index_left_of = |x: f64| {
        spec.layers
            .iter()
            .find(|l| x > l.start + POSITION_TOL && x <= l.end + POSITION_TOL)
            .map_or(1.0, |l| l.index)
    };
    let index_right_of = |x: f64| {
        spec.layers
            .iter()
            .find(|l| x >= l.start - POSITION_TOL && x < l.end - POSITION_TOL)
            .map_or(1.0, |l| l.index)
    };

    // Local amplitudes are referenced to the current point: ψ = a e^{iq(r−x)} + b e^{−iq(r−x)}.
    let mut m = mat2_identity();
    let mut prev: Option<(f64, C64)> = None;
    for &x in &points {
        let q_here = c(k * index_left_of(x));
        if let Some((xp, q)) = prev {
            let ph = (I * q * (x - xp)).exp();
            m = mat2_mul(&[[ph, ZERO], [ZERO, ONE / ph]], &m);
        }
        let mut mirrors: Vec<(C64, C64)> = Vec::new();
        for d in spec.deltas.iter().filter(|d| (d.position - x).abs() <= POSITION_TOL) {
            let amp = match spec.wave_kind {
                WaveKind::Schroedinger => delta_amplitudes(c(d.strength), q_here),
                WaveKind::MaxwellRwa | WaveKind::Sve if q_here == c(k) => {
                    let r = thin_mirror_reflectivity(d.strength, omega);
                    (r, ONE + r)
                }
                WaveKind::MaxwellRwa | WaveKind::Sve => delta_amplitudes(c(-d.strength * energy), q_here),
            };
            mirrors.push(amp);
        }
        if let Some((xa, eta)) = atom_layer {
            if (xa - x).abs() <= POSITION_TOL {
                mirrors.push(delta_amplitudes(-eta * energy, q_here));
            }
        }
        for (r, t) in mirrors {
            m = mat2_mul(&element_matrix(&OracleElement::Mirror { r, t }), &m);
        }
        let q_next = c(k * index_right_of(x));
        if q_next != q_here {
            m = mat2_mul(&element_matrix(&OracleElement::Interface { q_left: q_here, q_right: q_next }), &m);
        }
        prev = Some((x, q_next));
    }

    // Convert local amplitudes to global e^{±ikr} coefficients.
    let (x0, xn) = match (points.first(), points.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 0.0),
    };
    let into = [[(I * k * x0).exp(), ZERO], [ZERO, (-I * k * x0).exp()]];
    let out = [[(-I * k * xn).exp(), ZERO], [ZERO, (I * k * xn).exp()]];
    let g = mat2_mul(&out, &mat2_mul(&m, &into));
    let det = mat2_det(&g);
    let m22 = g[1][1];
    let r = -g[1][0] / m22;
    let t = det / m22;
    let tp = ONE / m22;
    let rp = g[0][1] / m22;
    Ok(SMatrix::new(energy, [[r, tp], [t, rp]]))
}

/// Full S from the bath and coupling data: (S_bg, S_io, S_bg·S_io).
pub fn decomposition(
    spec: &PotentialSpec,
    basis: &SystemBasis,
    bath: &BathStateTable,
    w_row: &CouplingRow,
    d: &DMatrix,
) -> Result<(SMatrix, SMatrix, SMatrix)> {
    let io = s_io(w_row, d)?;
    let bg = s_bg(spec, basis, bath, w_row)?;
    let full = s_full(&bg, &io)?;
    Ok((bg, io, full))
}

/// Everything the few-mode decomposition produces at one energy.
#[derive(Clone, Debug)]
pub struct FewModePoint {
    pub bath: BathStateTable,
    pub couplings: CouplingRow,
    pub gamma: LevelShiftMatrix,
    pub d: DMatrix,
    pub bg: SMatrix,
    pub io: SMatrix,
    pub full: SMatrix,
}

/// Bath states, couplings, Γ, D and the three S-matrices at energy E.
pub fn few_mode_point(spec: &PotentialSpec, basis: &SystemBasis, energy: f64, opts: &BathOptions) -> Result<FewModePoint> {
    let bath = bath_states(spec, basis, energy, opts)?;
    let row = couplings(basis, &bath)?;
    let gamma = gamma_from_bath(basis, &bath);
    let d = d_matrix(energy, basis, &gamma)?;
    let (bg, io, full) = decomposition(spec, basis, &bath, &row, &d)?;
    Ok(FewModePoint { bath, couplings: row, gamma, d, bg, io, full })
}

/// W†D⁻¹W as a 2×2 matrix (diagnostics and nonlinear drive).
pub fn resonant_kernel(w_row: &CouplingRow, d: &DMatrix) -> Result<Mat2> {
    if w_row.is_empty() {
        return Ok([[ZERO; 2]; 2]);
    }
    let w = w_row.matrix();
    let p: na::DMatrix<C64> = w.adjoint() * d.solve(&w)?;
    Ok([[p[(0, 0)], p[(0, 1)]], [p[(1, 0)], p[(1, 1)]]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DeltaBarrier, Layer};

    #[test]
    fn empty_geometry_is_lead_exchange() {
        let spec = PotentialSpec::empty(WaveKind::Schroedinger);
        let s = transfer_matrix_oracle(&spec, 1.3, None).unwrap();
        assert!(s.distance(&SMatrix::exchange(1.3)) < 1e-15);
    }

    #[test]
    fn single_delta_transmission() {
        let xi = 3.0;
        let mut spec = PotentialSpec::empty(WaveKind::Schroedinger);
        spec.deltas.push(DeltaBarrier { position: 0.2, strength: xi });
        for &k in &[0.5, 2.0, 7.0] {
            let s = transfer_matrix_oracle(&spec, 0.5 * k * k, None).unwrap();
            assert!((s.transmission().norm_sqr() - k * k / (k * k + xi * xi)).abs() < 1e-14);
            let r0 = C64::new(0.0, -xi) / C64::new(k, xi) * (I * 2.0 * k * 0.2).exp();
            assert!((s.reflection() - r0).norm() < 1e-14);
            assert!(s.unitarity_defect() < 1e-14);
        }
    }

    #[test]
    fn thin_mirror_reflectivity_reproduced() {
        let mut spec = PotentialSpec::empty(WaveKind::MaxwellRwa);
        spec.deltas.push(DeltaBarrier { position: 0.0, strength: 0.19 });
        let s = transfer_matrix_oracle(&spec, 0.5 * 25.0 * 25.0, None).unwrap();
        assert!((s.reflection() - thin_mirror_reflectivity(0.19, 25.0)).norm() < 1e-14);
    }

    #[test]
    fn dielectric_slab_is_unitary_and_reciprocal() {
        let mut spec = PotentialSpec::empty(WaveKind::MaxwellRwa);
        spec.layers.push(Layer::new(0.1, 0.35, 3.0));
        spec.support = (0.0, 0.5);
        let s = transfer_matrix_oracle(&spec, 12.0, None).unwrap();
        assert!(s.unitarity_defect() < 1e-13);
        assert!(s.reciprocity_defect() < 1e-13);
    }
}
