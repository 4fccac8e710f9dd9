//! Coupling constants, level-shift matrices and the resonant D-matrix.

use nalgebra as na;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PotentialSpec;
use crate::modes::{bath_states, BathOptions, BathStateTable, SystemBasis};
use crate::numerics::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Energy-normalized couplings W.
    Scattering,
    /// Frequency-normalized couplings 𝒲 = W/√ω_λ.
    Rwa,
}

/// Couplings W[λ][m] at one energy.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingRow {
    pub energy: f64,
    pub selector: Vec<usize>,
    pub values: Vec<[C64; 2]>,
}

impl CouplingRow {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// W as an N×2 matrix.
    pub fn matrix(&self) -> na::DMatrix<C64> {
        na::DMatrix::from_fn(self.values.len(), 2, |l, m| self.values[l][m])
    }

    /// 𝒲 = W/⁴√(2E_λ) = W/√ω_λ.
    pub fn rwa(&self, basis: &SystemBasis) -> na::DMatrix<C64> {
        na::DMatrix::from_fn(self.values.len(), 2, |l, m| self.values[l][m] / basis.modes[l].omega.sqrt())
    }

    /// F = W W†.
    pub fn outer(&self) -> na::DMatrix<C64> {
        let w = self.matrix();
        &w * w.adjoint()
    }
}

/// Surface-term couplings W_λm = c_a(λ)ψ̃_m(x_a) + c_b(λ)ψ̃_m(x_b) with c = (−χ'(x_a)/2, χ'(x_b)/2).
pub fn couplings(basis: &SystemBasis, bath: &BathStateTable) -> Result<CouplingRow> {
    if bath.selector != basis.selector() || bath.mode_support != basis.support {
        return Err(Error::validation("bath states were computed for a different system basis"));
    }
    let values = basis
        .weights()
        .iter()
        .map(|w| {
            let mut row = [ZERO; 2];
            for m in 0..2 {
                row[m] = w[0] * bath.boundary[0][m] + w[1] * bath.boundary[1][m];
            }
            row
        })
        .collect();
    Ok(CouplingRow { energy: bath.energy, selector: basis.selector(), values })
}

/// Couplings on a uniform wavenumber grid, used by the quadrature route.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTable {
    pub normalization: Normalization,
    pub selector: Vec<usize>,
    /// Length of the mode support, which sets the oscillation period 2π/L of W W† in k.
    pub mode_length: f64,
    /// Known high-energy limit of k·W W†, when the bath becomes transparent.
    pub asymptote: Option<na::DMatrix<C64>>,
    pub wavenumbers: Vec<f64>,
    pub rows: Vec<CouplingRow>,
}

impl CouplingTable {
    pub fn energies(&self) -> Vec<f64> {
        self.wavenumbers.iter().map(|k| 0.5 * k * k).collect()
    }

    pub fn e_min(&self) -> f64 {
        self.rows.first().map_or(0.0, |r| r.energy)
    }

    pub fn e_max(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.energy)
    }
}

/// Tabulate couplings for `count` (odd) wavenumbers uniformly spaced on [k_min, k_max].
pub fn coupling_table(
    spec: &PotentialSpec,
    basis: &SystemBasis,
    k_min: f64,
    k_max: f64,
    count: usize,
    opts: &BathOptions,
) -> Result<CouplingTable> {
    if count < 3 || count % 2 == 0 {
        return Err(Error::validation("coupling table needs an odd number (>= 3) of wavenumbers"));
    }
    if !(k_min > 0.0 && k_max > k_min) {
        return Err(Error::domain("coupling table needs 0 < k_min < k_max"));
    }
    let step = (k_max - k_min) / (count - 1) as f64;
    let wavenumbers: Vec<f64> = (0..count).map(|i| k_min + step * i as f64).collect();
    let rows = wavenumbers
        .par_iter()
        .map(|&k| {
            let bath = bath_states(spec, basis, 0.5 * k * k, opts)?;
            couplings(basis, &bath)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingTable {
        normalization: Normalization::Scattering,
        selector: basis.selector(),
        mode_length: basis.support.1 - basis.support.0,
        asymptote: transparent_asymptote(spec, basis),
        wavenumbers,
        rows,
    })
}

/// lim k·W W† = Σ_x c_x c_x'/π for potentials that become transparent at high energy.
///
/// Energy-independent barriers leave free waves at the mode boundaries as k → ∞, which
/// gives this limit after averaging the e^{±ikL} cross terms. Maxwell mirrors become
/// opaque instead, and their tail is fitted.
pub fn transparent_asymptote(spec: &PotentialSpec, basis: &SystemBasis) -> Option<na::DMatrix<C64>> {
    if spec.wave_kind.is_weighted() {
        return None;
    }
    let w = basis.weights();
    let n = w.len();
    Some(na::DMatrix::from_fn(n, n, |l, lp| {
        c((w[l][0] * w[lp][0] + w[l][1] * w[lp][1]) / std::f64::consts::PI)
    }))
}

/// Γ = −Δ + iγ over the selected modes (energy normalization).
#[derive(Clone, Debug, PartialEq)]
pub struct LevelShiftMatrix {
    pub energy: f64,
    pub gamma: na::DMatrix<C64>,
}

impl LevelShiftMatrix {
    pub fn empty(energy: f64) -> Self {
        LevelShiftMatrix { energy, gamma: na::DMatrix::zeros(0, 0) }
    }

    /// Δ = −Re Γ.
    pub fn shift(&self) -> na::DMatrix<f64> {
        self.gamma.map(|z| -z.re)
    }

    /// γ = Im Γ.
    pub fn width(&self) -> na::DMatrix<f64> {
        self.gamma.map(|z| z.im)
    }

    /// Smallest eigenvalue of the Hermitian part of the width matrix.
    pub fn min_width_eigenvalue(&self) -> f64 {
        if self.gamma.is_empty() {
            return 0.0;
        }
        let g = self.gamma.map(|z| C64::new(z.im, 0.0));
        let herm = (&g + g.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Γ = −⟨χ|H_QP G̃ H_PQ|χ⟩ from the P-space Green function at the boundaries.
pub fn gamma_from_bath(basis: &SystemBasis, bath: &BathStateTable) -> LevelShiftMatrix {
    let w = basis.weights();
    let n = w.len();
    let g = &bath.p_green;
    let gamma = na::DMatrix::from_fn(n, n, |l, lp| {
        let mut acc = ZERO;
        for x in 0..2 {
            for y in 0..2 {
                acc += w[l][x] * g[x][y] * w[lp][y];
            }
        }
        -acc
    });
    LevelShiftMatrix { energy: bath.energy, gamma }
}

/// Green-function route for Γ at energy E.
pub fn gamma_green(spec: &PotentialSpec, basis: &SystemBasis, energy: f64, opts: &BathOptions) -> Result<LevelShiftMatrix> {
    let bath = bath_states(spec, basis, energy, opts)?;
    Ok(gamma_from_bath(basis, &bath))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGamma {
    pub gamma: LevelShiftMatrix,
    /// Frobenius norm of the analytic tail added beyond E_max.
    pub tail: f64,
    /// Frobenius norm estimate of the neglected range [0, E_min].
    pub floor: f64,
}

/// Principal-value quadrature of Γ(E) = −∫ dE' W(E')W†(E')/(E − E' + i0).
///
/// The subtracted integrand is integrated with Simpson's rule in k. Beyond E_max,
/// k·W W† is modeled as A + B/k² plus terms oscillating with period 2π/L; A and B are
/// fitted from period averages over two trailing windows and integrated in closed form.
pub fn gamma_quadrature(table: &CouplingTable, on_shell: &CouplingRow) -> Result<QuadratureGamma> {
    let e = on_shell.energy;
    let n = on_shell.len();
    if table.selector != on_shell.selector {
        return Err(Error::validation("coupling table and on-shell row use different bases"));
    }
    let (e_min, e_max) = (table.e_min(), table.e_max());
    if !(e > e_min && e < e_max) {
        return Err(Error::domain(format!("E = {e} outside the table interior ({e_min}, {e_max})")));
    }
    if n == 0 {
        return Ok(QuadratureGamma { gamma: LevelShiftMatrix::empty(e), tail: 0.0, floor: 0.0 });
    }
    let f0 = on_shell.outer();
    let ks = &table.wavenumbers;
    let h = ks[1] - ks[0];
    let k0 = (2.0 * e).sqrt();
    let outers: Vec<na::DMatrix<C64>> = table.rows.iter().map(CouplingRow::outer).collect();

    let mut integral = na::DMatrix::<C64>::zeros(n, n);
    let last = ks.len() - 1;
    for (i, (&kp, fp)) in ks.iter().zip(&outers).enumerate() {
        let ep = 0.5 * kp * kp;
        let weight = if i == 0 || i == last {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
        let integrand = if ((kp - k0) / h).abs() < 1e-6 {
            // Removable point: −dF/dE by central differences.
            let j = i.clamp(1, last - 1);
            let dk = ks[j + 1] - ks[j - 1];
            (&outers[j + 1] - &outers[j - 1]) * C64::new(-1.0 / (dk * kp), 0.0)
        } else {
            (fp - &f0) * C64::new(1.0 / (e - ep), 0.0)
        };
        integral += integrand * C64::new(weight * kp, 0.0);
    }
    let log = ((e - e_min) / (e_max - e)).ln();
    let mut gamma = -(integral + &f0 * C64::new(log, 0.0));

    // ∫_{E_max}^∞ F/(E' − E) dE' = ∫_{k_max}^∞ 2 k'F/(k'² − k0²) dk'.
    let fit = fit_tail(table, &outers);
    let kmax = ks[last];
    let log_term = ((kmax + k0) / (kmax - k0)).ln() / k0;
    let (ic, is) = oscillatory_tail(table.mode_length, kmax, |k| 1.0 / (k * k - k0 * k0));
    let (ic1, is1) = oscillatory_tail(table.mode_length, kmax, |k| 1.0 / (k * (k * k - k0 * k0)));
    let tail = &fit.amp * C64::new(log_term, 0.0)
        + &fit.curv * C64::new(2.0 / (k0 * k0) * (0.5 * log_term - 1.0 / kmax), 0.0)
        + &fit.osc[0] * C64::new(2.0 * ic, 0.0)
        + &fit.osc[1] * C64::new(2.0 * is, 0.0)
        + &fit.osc[2] * C64::new(2.0 * ic1, 0.0)
        + &fit.osc[3] * C64::new(2.0 * is1, 0.0);
    gamma += &tail;

    let floor_est = outers[0].norm() * e_min / (e - e_min);
    gamma += &f0 * C64::new(0.0, std::f64::consts::PI);
    Ok(QuadratureGamma { gamma: LevelShiftMatrix { energy: e, gamma }, tail: tail.norm(), floor: floor_est })
}

/// Least-squares fit of k·W W† ≈ A + B/k² + (P + P'/k) cos(kL) + (Q + Q'/k) sin(kL)
/// over the top of the table.
struct TailFit {
    amp: na::DMatrix<C64>,
    curv: na::DMatrix<C64>,
    /// Coefficients of cos(kL), sin(kL), cos(kL)/k, sin(kL)/k.
    osc: [na::DMatrix<C64>; 4],
}

fn fit_tail(table: &CouplingTable, outers: &[na::DMatrix<C64>]) -> TailFit {
    let ks = &table.wavenumbers;
    let n = outers[0].nrows();
    let h = ks[1] - ks[0];
    let last = ks.len() - 1;
    let len = table.mode_length;
    let period = 2.0 * std::f64::consts::PI / len;
    let span = ks[last] - ks[0];
    let periods = (0.5 * span / period).floor().clamp(1.0, 4.0);
    let steps = ((periods * period / h).round() as usize).clamp(4, last);
    let lo = last - steps;
    let fixed = table.asymptote.is_some();
    let basis = |k: f64| -> Vec<f64> {
        let mut b = if fixed { vec![] } else { vec![1.0] };
        let (sn, cs) = (k * len).sin_cos();
        b.extend([1.0 / (k * k), cs, sn, cs / k, sn / k]);
        b
    };
    let p = basis(1.0).len();
    let x = na::DMatrix::<f64>::from_fn(steps + 1, p, |i, j| basis(ks[lo + i])[j]);
    let xt = x.transpose();
    let solver = (&xt * &x).try_inverse().map(|inv| inv * xt);
    let zero = na::DMatrix::<C64>::zeros(n, n);
    let Some(solver) = solver else {
        let amp = table.asymptote.clone().unwrap_or_else(|| zero.clone());
        return TailFit { amp, curv: zero.clone(), osc: [zero.clone(), zero.clone(), zero.clone(), zero] };
    };
    let mut coef = vec![zero.clone(); p];
    for i in 0..=steps {
        let mut y = &outers[lo + i] * C64::new(ks[lo + i], 0.0);
        if let Some(a) = &table.asymptote {
            y -= a;
        }
        for (j, cj) in coef.iter_mut().enumerate() {
            *cj += &y * C64::new(solver[(j, i)], 0.0);
        }
    }
    let (amp, rest) = match &table.asymptote {
        Some(a) => (a.clone(), &coef[..]),
        None => (coef[0].clone(), &coef[1..]),
    };
    TailFit {
        amp,
        curv: rest[0].clone(),
        osc: [rest[1].clone(), rest[2].clone(), rest[3].clone(), rest[4].clone()],
    }
}

/// ∫_K^∞ (cos(ak), sin(ak))·g(k) dk by integration by parts to third order.
fn oscillatory_tail(a: f64, big_k: f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    let dk = 1e-3 * big_k;
    let g0 = g(big_k);
    let g1 = (g(big_k + dk) - g(big_k - dk)) / (2.0 * dk);
    let g2 = (g(big_k + dk) - 2.0 * g0 + g(big_k - dk)) / (dk * dk);
    let (s, c) = (a * big_k).sin_cos();
    let ic = -s * g0 / a - c * g1 / (a * a) + s * g2 / (a * a * a);
    let is = c * g0 / a - s * g1 / (a * a) - c * g2 / (a * a * a);
    (ic, is)
}

/// D = diag(E − E_λ) + Γ, with its LU factorization.
#[derive(Clone, Debug)]
pub struct DMatrix {
    pub energy: f64,
    pub omegas: Vec<f64>,
    pub matrix: na::DMatrix<C64>,
    lu: na::LU<C64, na::Dyn, na::Dyn>,
}

/// Pivot ratio above which D is reported as singular.
pub const MAX_D_PIVOT_RATIO: f64 = 1e14;

pub fn d_matrix(energy: f64, basis: &SystemBasis, gamma: &LevelShiftMatrix) -> Result<DMatrix> {
    let n = basis.len();
    if gamma.gamma.nrows() != n {
        return Err(Error::validation("level-shift matrix size does not match the basis"));
    }
    if (gamma.energy - energy).abs() > 1e-12 * energy.abs().max(1.0) {
        return Err(Error::validation("level-shift matrix evaluated at a different energy"));
    }
    let mut matrix = gamma.gamma.clone();
    for (l, mode) in basis.modes.iter().enumerate() {
        matrix[(l, l)] += energy - mode.energy;
    }
    let lu = matrix.clone().lu();
    if n > 0 {
        let u = lu.u();
        let pivots: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
        let pmax = pivots.iter().cloned().fold(0.0, f64::max);
        let pmin = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(pmin > 0.0) || pmax / pmin > MAX_D_PIVOT_RATIO || !pmax.is_finite() {
            return Err(Error::singular(energy, "D-matrix is not invertible"));
        }
    }
    Ok(DMatrix { energy, omegas: basis.omegas(), matrix, lu })
}

impl DMatrix {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// D⁻¹·rhs.
    pub fn solve(&self, rhs: &na::DMatrix<C64>) -> Result<na::DMatrix<C64>> {
        if self.is_empty() {
            return Ok(na::DMatrix::zeros(0, rhs.ncols()));
        }
        self.lu.solve(rhs).ok_or_else(|| Error::singular(self.energy, "D-matrix solve failed"))
    }

    pub fn inverse(&self) -> Result<na::DMatrix<C64>> {
        self.solve(&na::DMatrix::identity(self.len(), self.len()))
    }

    /// 𝒟 = Ω^{-1/2} D Ω^{-1/2}, the frequency-normalized form with 𝒟_λλ = (ω² − ω_λ²)/(2ω_λ) + Γ'_λλ.
    pub fn rwa(&self) -> na::DMatrix<C64> {
        let n = self.len();
        na::DMatrix::from_fn(n, n, |l, lp| self.matrix[(l, lp)] / (self.omegas[l] * self.omegas[lp]).sqrt())
    }

    /// 𝒟⁻¹·rhs via the energy-normalized factorization.
    pub fn solve_rwa(&self, rhs: &na::DMatrix<C64>) -> Result<na::DMatrix<C64>> {
        let scaled = na::DMatrix::from_fn(rhs.nrows(), rhs.ncols(), |l, j| rhs[(l, j)] * self.omegas[l].sqrt());
        let x = self.solve(&scaled)?;
        Ok(na::DMatrix::from_fn(x.nrows(), x.ncols(), |l, j| x[(l, j)] * self.omegas[l].sqrt()))
    }
}
