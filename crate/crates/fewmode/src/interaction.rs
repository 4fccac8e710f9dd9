//! A two-level atom inside the cavity: couplings, linear scattering, level shifts,
//! the effective-permittivity oracle and the semiclassical steady state.
//!
//! Cavity quantities enter in frequency normalization, 𝒲 = Ω^{-1/2} W and
//! 𝒟 = Ω^{-1/2} D Ω^{-1/2}, so that W†D⁻¹W = 𝒲†𝒟⁻¹𝒲.

use nalgebra as na;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{energy_of, PotentialSpec};
use crate::modes::{BathOptions, SystemBasis};
use crate::numerics::*;
use crate::projection::{CouplingRow, DMatrix};
use crate::scattering::{few_mode_point, transfer_matrix_oracle, FewModePoint, SMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub omega_a: f64,
    pub d: f64,
    pub r_a: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomCouplings {
    pub selector: Vec<usize>,
    pub values: Vec<C64>,
}

impl AtomCouplings {
    pub fn vector(&self) -> na::DMatrix<C64> {
        na::DMatrix::from_column_slice(self.values.len(), 1, &self.values)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|g| *g == ZERO)
    }
}

/// g_λ = −i d ω_a (2ω_λ)^{-1/2} χ_λ(r_a).
pub fn atom_couplings(atom: &AtomSpec, basis: &SystemBasis) -> Result<AtomCouplings> {
    if !basis.contains(atom.r_a) {
        return Err(Error::validation(format!(
            "atom position {} lies outside the mode support ({}, {})",
            atom.r_a, basis.support.0, basis.support.1
        )));
    }
    let values = basis
        .modes
        .iter()
        .map(|m| -I * atom.d * atom.omega_a * (0.5 / m.omega).sqrt() * m.value_at(atom.r_a))
        .collect();
    Ok(AtomCouplings { selector: basis.selector(), values })
}

/// Complex atomic level shift and its parts at one frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearResponse {
    pub omega: f64,
    /// gᵀ𝒟⁻¹g*.
    pub shift: C64,
    pub gamma_s: f64,
    pub delta_ls: f64,
}

fn rwa_couplings(w_row: &CouplingRow, d: &DMatrix) -> na::DMatrix<C64> {
    na::DMatrix::from_fn(w_row.len(), 2, |l, m| w_row.values[l][m] / d.omegas[l].sqrt())
}

fn check_sizes(g: &AtomCouplings, d: &DMatrix) -> Result<()> {
    if g.values.len() != d.len() {
        return Err(Error::validation("atom couplings and D-matrix sizes differ"));
    }
    Ok(())
}

pub fn level_shift(g: &AtomCouplings, d: &DMatrix) -> Result<LinearResponse> {
    check_sizes(g, d)?;
    let omega = (2.0 * d.energy).sqrt();
    if g.values.is_empty() {
        return Ok(LinearResponse { omega, shift: ZERO, gamma_s: 0.0, delta_ls: 0.0 });
    }
    let gv = g.vector();
    let x = d.solve_rwa(&gv.map(|z| z.conj()))?;
    let shift = (gv.transpose() * x)[(0, 0)];
    Ok(LinearResponse { omega, shift, gamma_s: -shift.im, delta_ls: shift.re })
}

/// The atom-induced part of the resonant matrix, 𝒲†𝒟⁻¹g* gᵀ𝒟⁻¹𝒲 / (ω − ω_a − gᵀ𝒟⁻¹g*),
/// together with the level shift.
fn atom_kernel(w_row: &CouplingRow, d: &DMatrix, g: &AtomCouplings, omega_a: f64, omega: f64) -> Result<(Mat2, LinearResponse)> {
    check_sizes(g, d)?;
    if w_row.len() != d.len() {
        return Err(Error::validation("coupling row and D-matrix sizes differ"));
    }
    let resp = level_shift(g, d)?;
    if g.values.is_empty() || g.is_zero() {
        return Ok(([[ZERO; 2]; 2], resp));
    }
    let w = rwa_couplings(w_row, d);
    let gv = g.vector();
    let left = w.adjoint() * d.solve_rwa(&gv.map(|z| z.conj()))?;
    let right = gv.transpose() * d.solve_rwa(&w)?;
    let den = omega - omega_a - resp.shift;
    if !(den.norm() > 1e-300) {
        return Err(Error::singular(d.energy, "atomic pole hit exactly"));
    }
    let mut k = [[ZERO; 2]; 2];
    for m in 0..2 {
        for mp in 0..2 {
            k[m][mp] = left[(m, 0)] * right[(0, mp)] / den;
        }
    }
    Ok((k, resp))
}

/// Resonant scattering matrix including the atomic pole in the weak-excitation limit.
pub fn linear_smatrix_with_atom(
    w_row: &CouplingRow,
    d: &DMatrix,
    g: &AtomCouplings,
    omega_a: f64,
    omega: f64,
) -> Result<SMatrix> {
    let free = crate::scattering::s_io(w_row, d)?;
    let (k, _) = atom_kernel(w_row, d, g, omega_a, omega)?;
    let two_pi_i = 2.0 * std::f64::consts::PI * I;
    let mut s = free.entries;
    for m in 0..2 {
        for mp in 0..2 {
            s[m][mp] -= two_pi_i * k[m][mp];
        }
    }
    Ok(SMatrix::new(free.energy, s))
}

/// Transmission coupling of the atomic line, 2π|[𝒲†𝒟⁻¹g* gᵀ𝒟⁻¹𝒲]₁₀|.
pub fn atom_transmission_coupling(w_row: &CouplingRow, d: &DMatrix, g: &AtomCouplings) -> Result<f64> {
    check_sizes(g, d)?;
    if g.values.is_empty() {
        return Ok(0.0);
    }
    let w = rwa_couplings(w_row, d);
    let gv = g.vector();
    let left = w.adjoint() * d.solve_rwa(&gv.map(|z| z.conj()))?;
    let right = gv.transpose() * d.solve_rwa(&w)?;
    Ok(2.0 * std::f64::consts::PI * (left[(1, 0)] * right[(0, 0)]).norm())
}

/// Thin-layer strength η(ω) of the atom: ε → ε + η δ(r − r_a), counter-rotating part included.
pub fn effective_permittivity_layer(atom: &AtomSpec, omega: f64) -> Result<C64> {
    let wa = atom.omega_a;
    let den = omega * omega - wa * wa;
    if den == 0.0 || !(omega > 0.0) {
        return Err(Error::singular(energy_of(omega), "effective permittivity evaluated at the atomic pole"));
    }
    Ok(c(-(wa * wa) / (omega * omega) * 2.0 * wa * atom.d * atom.d / den))
}

/// Exact linear spectrum with the atom replaced by its effective permittivity.
pub fn linear_dispersion_oracle(spec: &PotentialSpec, atom: &AtomSpec, energy: f64) -> Result<SMatrix> {
    if !spec.wave_kind.is_maxwell() {
        return Err(Error::validation("an atom requires a Maxwell wave kind"));
    }
    let omega = (2.0 * energy).sqrt();
    let eta = effective_permittivity_layer(atom, omega)?;
    transfer_matrix_oracle(spec, energy, Some((atom.r_a, eta)))
}

/// Few-mode linear atom-cavity spectrum at one frequency: (S_bg, S_io with atom, S_bg·S_io).
#[derive(Clone, Debug)]
pub struct AtomPoint {
    pub free: FewModePoint,
    pub io: SMatrix,
    pub full: SMatrix,
    pub response: LinearResponse,
    pub kappa_t: f64,
}

pub fn atom_point(
    spec: &PotentialSpec,
    basis: &SystemBasis,
    atom: &AtomSpec,
    omega: f64,
    opts: &BathOptions,
) -> Result<AtomPoint> {
    let energy = energy_of(omega);
    let free = few_mode_point(spec, basis, energy, opts)?;
    let g = atom_couplings(atom, basis)?;
    let io = linear_smatrix_with_atom(&free.couplings, &free.d, &g, atom.omega_a, omega)?;
    let full = free.bg.product(&io);
    let response = level_shift(&g, &free.d)?;
    let kappa_t = atom_transmission_coupling(&free.couplings, &free.d, &g)?;
    Ok(AtomPoint { free, io, full, response, kappa_t })
}

/// Monochromatic coherent drive, amplitudes indexed by incident lead.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drive {
    pub omega_in: f64,
    pub b_in: [C64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveResponse {
    pub omega_in: f64,
    pub b_in: [C64; 2],
    /// Δ = ω_in − ω_a.
    pub detuning: f64,
    /// Ω = 2π gᵀ𝒟⁻¹𝒲 b_in.
    pub rabi: C64,
    /// δ = gᵀ𝒟⁻¹g*.
    pub shift: C64,
    pub sigma_minus: C64,
    pub sigma_z: f64,
    /// Bath-channel output amplitudes.
    pub b_out: [C64; 2],
    /// Outgoing amplitudes in lead order after the background factor.
    pub observable: [C64; 2],
    /// Largest relative residual of the steady-state equations.
    pub residual: f64,
}

/// Semiclassical steady state of the driven atom-cavity system.
pub fn semiclassical_steady_state(
    w_row: &CouplingRow,
    d: &DMatrix,
    g: &AtomCouplings,
    atom: &AtomSpec,
    bg: &SMatrix,
    drive: &Drive,
) -> Result<DriveResponse> {
    check_sizes(g, d)?;
    let detuning = drive.omega_in - atom.omega_a;
    let b = na::DMatrix::from_column_slice(2, 1, &drive.b_in);
    let n = d.len();
    let (rabi, shift, cavity_out) = if n == 0 {
        (ZERO, ZERO, na::DMatrix::zeros(2, 1))
    } else {
        let w = rwa_couplings(w_row, d);
        let gv = g.vector();
        let gc = gv.map(|z| z.conj());
        let drive_vec = (&w * &b) * C64::new(2.0 * std::f64::consts::PI, 0.0);
        let rabi = (gv.transpose() * d.solve_rwa(&drive_vec)?)[(0, 0)];
        let shift = (gv.transpose() * d.solve_rwa(&gc)?)[(0, 0)];
        (rabi, shift, w.adjoint() * d.solve_rwa(&drive_vec)?)
    };
    let dd = detuning - shift;
    let den = dd + 2.0 * rabi.norm_sqr() / (detuning - shift.conj());
    // 1 + σz is kept separately; forming it from σz cancels at weak drive.
    let (sigma_minus, sigma_z, excitation) = if rabi == ZERO {
        (ZERO, -1.0, 0.0)
    } else {
        if !(den.norm() > 1e-300) || !den.is_finite() {
            return Err(Error::singular(d.energy, "vanishing steady-state denominator"));
        }
        let total = dd.norm_sqr() + 2.0 * rabi.norm_sqr();
        (rabi / den, -dd.norm_sqr() / total, 2.0 * rabi.norm_sqr() / total)
    };
    let mut b_out = drive.b_in;
    if n > 0 {
        let w = rwa_couplings(w_row, d);
        let gc = g.vector().map(|z| z.conj());
        let atom_out = w.adjoint() * d.solve_rwa(&gc)? * sigma_minus;
        for m in 0..2 {
            b_out[m] -= I * (cavity_out[(m, 0)] + atom_out[(m, 0)]);
        }
    }
    let observable = [
        bg.entries[0][0] * b_out[0] + bg.entries[0][1] * b_out[1],
        bg.entries[1][0] * b_out[0] + bg.entries[1][1] * b_out[1],
    ];

    let sigma_plus = sigma_minus.conj();
    let sz = c(sigma_z);
    let r1 = -I * detuning * sigma_plus - I * rabi.conj() * sz + I * shift.conj() * sigma_plus;
    let r2 = I * detuning * sigma_minus + I * rabi * sz - I * shift * sigma_minus;
    let r3 = -I * rabi * sigma_plus + I * rabi.conj() * sigma_minus + shift.im * excitation;
    let s12 = (detuning.abs() + shift.norm()) * sigma_minus.norm() + rabi.norm() * sigma_z.abs();
    let s3 = 2.0 * rabi.norm() * sigma_minus.norm() + shift.im.abs() * excitation;
    let rel = |r: C64, s: f64| if s > 0.0 { r.norm() / s } else { r.norm() };
    let residual = rel(r1, s12).max(rel(r2, s12)).max(rel(r3, s3));

    Ok(DriveResponse {
        omega_in: drive.omega_in,
        b_in: drive.b_in,
        detuning,
        rabi,
        shift,
        sigma_minus,
        sigma_z,
        b_out,
        observable,
        residual,
    })
}

/// Frequency of the transmission maximum of the oracle spectrum within [lo, hi].
pub fn transmission_peak(spec: &PotentialSpec, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::domain("peak search needs 0 < lo < hi"));
    }
    let t2 = |w: f64| -> Result<f64> { Ok(transfer_matrix_oracle(spec, energy_of(w), None)?.transmission().norm_sqr()) };
    let samples = 401;
    let step = (hi - lo) / (samples - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..samples {
        let w = lo + i as f64 * step;
        let v = t2(w)?;
        if v > best.1 {
            best = (w, v);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (t2(x1)?, t2(x2)?);
    while b - a > 1e-12 * b.abs().max(1.0) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = t2(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = t2(x1)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::dirichlet_modes;

    #[test]
    fn couplings_vanish_on_nodes() {
        let spec = PotentialSpec::thin_mirror_cavity(1.0, 0.1);
        let basis = dirichlet_modes(&spec, (-0.5, 0.5), &[1, 2, 3, 4]).unwrap();
        let atom = AtomSpec { omega_a: 10.0, d: 0.1, r_a: 0.0 };
        let g = atom_couplings(&atom, &basis).unwrap();
        assert!(g.values[1].norm() < 1e-15 && g.values[3].norm() < 1e-15);
        assert!(g.values[0].norm() > 0.0);
    }

    #[test]
    fn permittivity_layer_is_dispersive() {
        let atom = AtomSpec { omega_a: 10.0, d: 0.1, r_a: 0.0 };
        let below = effective_permittivity_layer(&atom, 9.9).unwrap();
        let above = effective_permittivity_layer(&atom, 10.1).unwrap();
        assert!(below.re > 0.0 && above.re < 0.0);
        assert!(effective_permittivity_layer(&atom, 10.0).is_err());
        let none = AtomSpec { d: 0.0, ..atom };
        assert_eq!(effective_permittivity_layer(&none, 3.0).unwrap(), ZERO);
    }
}
