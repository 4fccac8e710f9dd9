//! Mode ordering, the few-mode deviation metric, the separable cavity fixture and the
//! mode-sum divergence control.

use nalgebra as na;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{energy_of, PotentialSpec};
use crate::interaction::{atom_point, linear_dispersion_oracle, AtomSpec};
use crate::modes::{dirichlet_modes, BathOptions};
use crate::numerics::*;
use crate::scattering::transfer_matrix_oracle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    SymmetricAboutDominant,
    CountingUp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
    All,
}

impl Parity {
    pub fn admits(self, lambda: usize) -> bool {
        match self {
            Parity::Odd => lambda % 2 == 1,
            Parity::Even => lambda % 2 == 0,
            Parity::All => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingScheme {
    pub ordering: Ordering,
    pub dominant: usize,
    pub parity: Parity,
}

impl OrderingScheme {
    pub fn symmetric(dominant: usize) -> Self {
        OrderingScheme { ordering: Ordering::SymmetricAboutDominant, dominant, parity: Parity::Odd }
    }

    pub fn counting_up() -> Self {
        OrderingScheme { ordering: Ordering::CountingUp, dominant: 1, parity: Parity::Odd }
    }
}

/// The first `n` modes of an ordering, returned sorted ascending.
///
/// Dominance is the distance |λ − λ_dominant|, ties going to the lower index.
pub fn mode_sequence(scheme: &OrderingScheme, n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::validation("a mode sequence needs at least one mode"));
    }
    let top = scheme.dominant.max(1) + 2 * n + 2;
    let mut candidates: Vec<usize> = (1..=top).filter(|&l| scheme.parity.admits(l)).collect();
    if scheme.ordering == Ordering::SymmetricAboutDominant {
        let dom = scheme.dominant as i64;
        candidates.sort_by_key(|&l| ((l as i64 - dom).abs(), l));
    }
    let mut out: Vec<usize> = candidates.into_iter().take(n).collect();
    out.sort_unstable();
    Ok(out)
}

/// Complex transmission amplitudes sampled on a frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub grid: Vec<f64>,
    pub values: Vec<C64>,
}

/// Δ = Σ|S_few − S_ref|² / Σ|S_0 − S_ref|².
pub fn few_mode_deviation(few: &Spectrum, reference: &Spectrum, zero: &Spectrum) -> Result<f64> {
    for s in [few, reference, zero] {
        if s.grid.len() != s.values.len() {
            return Err(Error::validation("spectrum grid and values differ in length"));
        }
    }
    let same = |a: &Spectrum, b: &Spectrum| {
        a.grid.len() == b.grid.len() && a.grid.iter().zip(&b.grid).all(|(x, y)| x == y)
    };
    if !same(few, reference) || !same(zero, reference) {
        return Err(Error::validation("deviation spectra are sampled on different grids"));
    }
    let num: f64 = few.values.iter().zip(&reference.values).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = zero.values.iter().zip(&reference.values).map(|(a, b)| (a - b).norm_sqr()).sum();
    if !(den > 0.0) {
        return Err(Error::domain("degenerate deviation: the zero-mode spectrum equals the reference"));
    }
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub ordering: OrderingScheme,
    pub counts: Vec<usize>,
    pub selectors: Vec<Vec<usize>>,
    pub deviations: Vec<f64>,
    pub reference: String,
}

impl ConvergenceReport {
    pub fn deviation_at(&self, count: usize) -> Option<f64> {
        self.counts.iter().position(|&n| n == count).map(|i| self.deviations[i])
    }

    /// Counts at which the deviation fails to drop below its predecessor.
    pub fn increases(&self) -> Vec<usize> {
        self.deviations
            .windows(2)
            .zip(self.counts.iter().skip(1))
            .filter(|(w, _)| w[1] >= w[0])
            .map(|(_, &n)| n)
            .collect()
    }
}

pub const ATOM_REFERENCE: &str = "transfer-matrix with effective atomic permittivity layer";

/// Oracle transmission spectrum over a frequency grid, optionally with an atom.
pub fn oracle_transmission(spec: &PotentialSpec, atom: Option<&AtomSpec>, grid: &[f64]) -> Result<Spectrum> {
    let values = grid
        .par_iter()
        .map(|&w| {
            let e = energy_of(w);
            Ok(match atom {
                Some(a) => linear_dispersion_oracle(spec, a, e)?,
                None => transfer_matrix_oracle(spec, e, None)?,
            }
            .transmission())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum { grid: grid.to_vec(), values })
}

/// Few-mode bg·io transmission of the atom-cavity system for one mode selector.
pub fn atom_transmission(
    spec: &PotentialSpec,
    support: (f64, f64),
    selector: &[usize],
    atom: &AtomSpec,
    grid: &[f64],
    opts: &BathOptions,
) -> Result<Spectrum> {
    let basis = dirichlet_modes(spec, support, selector)?;
    let values = grid
        .iter()
        .map(|&w| Ok(atom_point(spec, &basis, atom, w, opts)?.full.transmission()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum { grid: grid.to_vec(), values })
}

/// Δ_few of the linear atom-cavity spectrum for each mode count of an ordering.
pub fn atom_convergence_scan(
    spec: &PotentialSpec,
    support: (f64, f64),
    atom: &AtomSpec,
    grid: &[f64],
    scheme: &OrderingScheme,
    counts: &[usize],
    opts: &BathOptions,
) -> Result<ConvergenceReport> {
    let reference = oracle_transmission(spec, Some(atom), grid)?;
    let zero = oracle_transmission(spec, None, grid)?;
    let selectors = counts.iter().map(|&n| mode_sequence(scheme, n)).collect::<Result<Vec<_>>>()?;
    let deviations = selectors
        .par_iter()
        .map(|sel| {
            let few = atom_transmission(spec, support, sel, atom, grid, opts)?;
            few_mode_deviation(&few, &reference, &zero)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        ordering: *scheme,
        counts: counts.to_vec(),
        selectors,
        deviations,
        reference: ATOM_REFERENCE.to_string(),
    })
}

/// Closed-form cavity with Dirichlet modes ω_λ = λπ/L, a separable level-shift matrix
/// and an atom at the cavity center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparableFixture {
    pub alpha: f64,
    pub beta: f64,
    pub w: f64,
    pub g_tilde: f64,
    pub length: f64,
}

/// Partial sums over the modes 1..=n.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparableSums {
    pub n: usize,
    pub s: f64,
    pub b: f64,
    pub g1: f64,
    pub g2: f64,
    /// gᵀ𝒟⁻¹g* from the sums.
    pub shift: C64,
    /// gᵀ𝒟⁻¹𝒲 from the sums.
    pub drive: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparableMatrices {
    pub sums: SeparableSums,
    pub couplings: Vec<C64>,
    pub d_inv_sherman_morrison: na::DMatrix<C64>,
    pub d_inv_dense: na::DMatrix<C64>,
    /// Largest entrywise |SM − dense|.
    pub inverse_gap: f64,
    /// gᵀ𝒟⁻¹g* by dense inversion.
    pub shift_dense: C64,
}

impl SeparableFixture {
    pub fn new(alpha: f64, beta: f64, w: f64, g_tilde: f64, length: f64) -> Result<Self> {
        let f = SeparableFixture { alpha, beta, w, g_tilde, length };
        f.check()?;
        Ok(f)
    }

    fn check(&self) -> Result<()> {
        if !(self.length > 0.0) || !(self.alpha > 0.0) {
            return Err(Error::domain("fixture needs α > 0 and L > 0"));
        }
        let frac = (self.alpha / std::f64::consts::PI).fract();
        if frac.min(1.0 - frac) < 1e-10 {
            return Err(Error::domain(format!("α = {} sits on a pole of cot α", self.alpha)));
        }
        Ok(())
    }

    pub fn gamma_tilde(&self) -> f64 {
        std::f64::consts::PI / self.length
    }

    /// αcotα − iβ.
    fn kernel(&self) -> C64 {
        C64::new(self.alpha / self.alpha.tan(), -self.beta)
    }

    fn omega_lambda(&self, l: usize) -> f64 {
        l as f64 * std::f64::consts::PI / self.length
    }

    /// Inverse of the diagonal part, 2ω_λ/(ω² − ω_λ²) with ω = α/L.
    fn diag_inverse(&self, l: usize) -> f64 {
        let pl = std::f64::consts::PI * l as f64;
        2.0 * pl * self.length / (self.alpha * self.alpha - pl * pl)
    }

    fn u(l: usize) -> f64 {
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        sign * (l as f64).sqrt()
    }

    fn coupling(&self, l: usize) -> f64 {
        self.g_tilde * (std::f64::consts::PI * l as f64 * 0.5).sin() / (l as f64).sqrt()
    }

    pub fn g1_limit(&self) -> f64 {
        let pi = std::f64::consts::PI;
        -self.g_tilde * self.g_tilde * self.length * pi / (2.0 * self.alpha) * (0.5 * self.alpha).tan()
    }

    pub fn sums(&self, n: usize) -> Result<SeparableSums> {
        self.check()?;
        let pi = std::f64::consts::PI;
        let a2 = self.alpha * self.alpha;
        let (mut s, mut g1, mut g2) = (0.0, 0.0, 0.0);
        for l in 1..=n {
            let pl = pi * l as f64;
            let den = a2 - pl * pl;
            s += 2.0 * pl * pl / den;
            if l % 2 == 1 {
                g1 += 1.0 / den;
                let sign = if l % 4 == 1 { -1.0 } else { 1.0 };
                g2 += sign * pl / den;
            }
        }
        let gg = self.g_tilde * self.g_tilde;
        g1 *= 2.0 * gg * self.length * pi;
        let kernel = self.kernel();
        let shift = c(g1) - 4.0 * pi * gg * self.length * g2 * g2 / kernel;
        let drive = 2.0 * self.w * self.length * self.g_tilde * g2 / kernel;
        Ok(SeparableSums { n, s, b: s / self.gamma_tilde(), g1, g2, shift, drive })
    }

    /// 𝒲_λ = w √λ (−1)^λ / (αcotα − s − iβ).
    pub fn couplings(&self, n: usize) -> Result<Vec<C64>> {
        let s = self.sums(n)?.s;
        let den = self.kernel() - s;
        Ok((1..=n).map(|l| self.w * Self::u(l) / den).collect())
    }

    /// 𝒟 with diagonal (ω² − ω_λ²)/(2ω_λ) plus the separable rank-one level shift.
    pub fn d_matrix(&self, n: usize) -> Result<na::DMatrix<C64>> {
        let s = self.sums(n)?.s;
        let c_rank = self.gamma_tilde() / (self.kernel() - s);
        let omega = self.alpha / self.length;
        Ok(na::DMatrix::from_fn(n, n, |i, j| {
            let (li, lj) = (i + 1, j + 1);
            let mut v = c_rank * Self::u(li) * Self::u(lj);
            if i == j {
                let wl = self.omega_lambda(li);
                v += (omega * omega - wl * wl) / (2.0 * wl);
            }
            v
        }))
    }

    pub fn matrices(&self, n: usize) -> Result<SeparableMatrices> {
        let sums = self.sums(n)?;
        let kernel = self.kernel();
        let a: Vec<f64> = (1..=n).map(|l| self.diag_inverse(l)).collect();
        let au: Vec<f64> = (1..=n).map(|l| a[l - 1] * Self::u(l)).collect();
        let factor = self.gamma_tilde() / kernel;
        let sm = na::DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { c(a[i]) } else { ZERO };
            diag - factor * au[i] * au[j]
        });
        let dense = self
            .d_matrix(n)?
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::singular(energy_of(self.alpha / self.length), "fixture D-matrix"))?;
        let inverse_gap = (&sm - &dense).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let g: Vec<C64> = (1..=n).map(|l| c(self.coupling(l))).collect();
        let gv = na::DMatrix::from_column_slice(n, 1, &g);
        let shift_dense = (gv.transpose() * &dense * gv.map(|z| z.conj()))[(0, 0)];
        Ok(SeparableMatrices {
            sums,
            couplings: g,
            d_inv_sherman_morrison: sm,
            d_inv_dense: dense,
            inverse_gap,
            shift_dense,
        })
    }
}

/// K_N(x) = Σ_{λ=1}^{N} λ/(x − λ).
pub fn mode_sum_divergence(x: f64, n: usize) -> Result<f64> {
    if n >= 1 && x >= 0.5 && x <= n as f64 + 0.5 && (x - x.round()).abs() < 1e-12 {
        return Err(Error::domain(format!("mode sum evaluated on the resonance x = {x}")));
    }
    Ok((1..=n).map(|l| l as f64 / (x - l as f64)).sum())
}

/// Argument x = ω n d / π of the mode sum for a dielectric slab of index n and thickness d.
pub fn divergence_argument(omega: f64, index: f64, thickness: f64) -> f64 {
    omega * index * thickness / std::f64::consts::PI
}
