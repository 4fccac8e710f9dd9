//! System modes, free states and P-space bath states.
//!
//! Bath states are computed by one of two solvers:
//! - `Exact`: outgoing solutions of the full problem are propagated through the
//!   piecewise-constant profile, and the rank-two boundary structure of the
//!   projected operator is eliminated in closed form.
//! - `Nystrom`: a dense discretization of the projected Lippmann-Schwinger
//!   equation with analytic treatment of every delta term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PotentialSpec, Profile, POSITION_TOL};
use crate::numerics::*;

pub mod nystrom;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Incident from the left, e^{ikr}.
    Left,
    /// Incident from the right, e^{-ikr}.
    Right,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Left, Channel::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    /// +1 for e^{ikr}, −1 for e^{-ikr}.
    pub fn direction(self) -> f64 {
        match self {
            Channel::Left => 1.0,
            Channel::Right => -1.0,
        }
    }
}

/// Dirichlet mode √(2/L)·sin(ω_λ(r − x_a)) on [x_a, x_b].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemMode {
    pub index: usize,
    pub omega: f64,
    pub energy: f64,
    pub support: (f64, f64),
}

impl SystemMode {
    pub fn new(index: usize, support: (f64, f64)) -> Self {
        let omega = index as f64 * std::f64::consts::PI / (support.1 - support.0);
        SystemMode { index, omega, energy: 0.5 * omega * omega, support }
    }

    pub fn length(&self) -> f64 {
        self.support.1 - self.support.0
    }

    pub fn amplitude(&self) -> f64 {
        (2.0 / self.length()).sqrt()
    }

    pub fn value_at(&self, r: f64) -> f64 {
        let (a, b) = self.support;
        if r <= a || r >= b {
            return 0.0;
        }
        self.amplitude() * (self.omega * (r - a)).sin()
    }

    /// (χ'(x_a), χ'(x_b)).
    pub fn boundary_slopes(&self) -> (f64, f64) {
        let s = self.amplitude() * self.omega;
        let sign = if self.index % 2 == 0 { 1.0 } else { -1.0 };
        (s, s * sign)
    }

    /// Weights c with H χ = E_λ χ + c_a δ(r − x_a) + c_b δ(r − x_b).
    pub fn surface_weights(&self) -> [f64; 2] {
        let (sa, sb) = self.boundary_slopes();
        [-0.5 * sa, 0.5 * sb]
    }

    /// ⟨k_m|χ⟩ for the energy-normalized free wave of the given channel.
    pub fn free_overlap(&self, channel: Channel, k: C64) -> C64 {
        let (a, _) = self.support;
        let l = self.length();
        let kk = k * channel.direction();
        let w = c(self.omega);
        let plus = l * phi1(I * (w - kk) * l);
        let minus = l * phi1(I * (-w - kk) * l);
        let sine = (plus - minus) / (2.0 * I);
        (-I * kk * a).exp() * self.amplitude() * sine / (2.0 * std::f64::consts::PI * k).sqrt()
    }

    /// (G₀χ)(r) by analytic integration, regular at E = E_λ.
    pub fn free_green_applied(&self, k: C64, r: f64) -> C64 {
        let (a, b) = self.support;
        let w = self.omega;
        let mut acc = ZERO;
        for sigma in [1.0, -1.0] {
            let phase = (-I * sigma * w * a).exp();
            let left = (I * k * r).exp() * exp_integral(c(sigma * w) - k, a, r.min(b));
            let right = (-I * k * r).exp() * exp_integral(c(sigma * w) + k, r.max(a), b);
            acc += sigma * phase * (left + right);
        }
        -I / k * self.amplitude() / (2.0 * I) * acc
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemBasis {
    pub support: (f64, f64),
    pub modes: Vec<SystemMode>,
}

impl SystemBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn selector(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.index).collect()
    }

    pub fn weights(&self) -> Vec<[f64; 2]> {
        self.modes.iter().map(SystemMode::surface_weights).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.omega).collect()
    }

    pub fn boundaries(&self) -> [f64; 2] {
        [self.support.0, self.support.1]
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.support.0 && r < self.support.1
    }
}

/// Dirichlet modes on `support`, which must be free of layers and deltas in its interior.
pub fn dirichlet_modes(spec: &PotentialSpec, support: (f64, f64), selector: &[usize]) -> Result<SystemBasis> {
    spec.validate()?;
    let (a, b) = support;
    if !(a < b) {
        return Err(Error::validation("mode support must satisfy start < end"));
    }
    if a < spec.support.0 - POSITION_TOL || b > spec.support.1 + POSITION_TOL {
        return Err(Error::validation("mode support exceeds the potential support"));
    }
    if spec.layers.iter().any(|l| l.index != 1.0 && l.start < b - POSITION_TOL && l.end > a + POSITION_TOL) {
        return Err(Error::validation("mode support must be vacuum in its interior"));
    }
    if spec
        .deltas
        .iter()
        .any(|d| d.strength != 0.0 && d.position > a + POSITION_TOL && d.position < b - POSITION_TOL)
    {
        return Err(Error::validation("delta barrier inside the mode support"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &l in selector {
        if l == 0 {
            return Err(Error::validation("mode index must be positive"));
        }
        if !seen.insert(l) {
            return Err(Error::validation(format!("duplicate mode index {l}")));
        }
    }
    Ok(SystemBasis { support, modes: selector.iter().map(|&l| SystemMode::new(l, support)).collect() })
}

/// Energy-normalized plane wave e^{±ikr}/√(2πk).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeState {
    pub channel: Channel,
    pub k: f64,
}

impl FreeState {
    pub fn value(&self, r: f64) -> C64 {
        free_wave(self.channel, c(self.k), r)
    }
}

pub(crate) fn free_wave(channel: Channel, k: C64, r: f64) -> C64 {
    (I * channel.direction() * k * r).exp() / (2.0 * std::f64::consts::PI * k).sqrt()
}

/// Complex-conjugated free wave used as a bra, analytically continued in k.
pub(crate) fn free_bra(channel: Channel, k: C64, r: f64) -> C64 {
    (-I * channel.direction() * k * r).exp() / (2.0 * std::f64::consts::PI * k).sqrt()
}

/// Retarded free kernel −(i/k)·e^{ik|r−r'|}.
pub fn free_green_kernel(energy: f64, r: f64, r_prime: f64) -> Result<C64> {
    if !(energy > 0.0) {
        return Err(Error::domain(format!("free Green kernel needs E > 0, got {energy}")));
    }
    Ok(free_green(c((2.0 * energy).sqrt()), r, r_prime))
}

pub(crate) fn free_green(k: C64, r: f64, r_prime: f64) -> C64 {
    -I / k * (I * k * (r - r_prime).abs()).exp()
}

fn value_slope(q: C64, ab: [C64; 2], x: f64) -> (C64, C64) {
    let e = (I * q * x).exp();
    let a = ab[0] * e;
    let b = ab[1] / e;
    (a + b, I * q * (a - b))
}

fn coeffs_from(q: C64, value: C64, slope: C64, x: f64) -> [C64; 2] {
    let e = (I * q * x).exp();
    let t = slope / (I * q);
    [(value + t) / (2.0 * e), (value - t) * e / 2.0]
}

/// Outgoing solutions of the full problem in a piecewise-constant profile.
///
/// `u_R = e^{ikr}` on the far right and `u_L = e^{-ikr}` on the far left, stored as
/// region-wise coefficients of e^{±iqr} in global coordinates.
#[derive(Clone, Debug)]
pub struct WaveSolutions {
    pub profile: Profile,
    right: Vec<[C64; 2]>,
    left: Vec<[C64; 2]>,
}

impl WaveSolutions {
    pub fn new(profile: Profile) -> Self {
        let n = profile.region_count();
        let mut right = vec![[ZERO; 2]; n];
        right[n - 1] = [ONE, ZERO];
        for j in (0..n - 1).rev() {
            let iface = profile.interfaces[j];
            let (v, d) = value_slope(profile.region_q(j + 1), right[j + 1], iface.position);
            right[j] = coeffs_from(profile.region_q(j), v, d - 2.0 * iface.xi * v, iface.position);
        }
        let mut left = vec![[ZERO; 2]; n];
        left[0] = [ZERO, ONE];
        for j in 0..n - 1 {
            let iface = profile.interfaces[j];
            let (v, d) = value_slope(profile.region_q(j), left[j], iface.position);
            left[j + 1] = coeffs_from(profile.region_q(j + 1), v, d + 2.0 * iface.xi * v, iface.position);
        }
        WaveSolutions { profile, right, left }
    }

    pub fn k(&self) -> C64 {
        self.profile.k
    }

    fn eval(&self, coeffs: &[[C64; 2]], r: f64) -> C64 {
        let j = self.profile.region_of(r);
        value_slope(self.profile.region_q(j), coeffs[j], r).0
    }

    pub fn u_right(&self, r: f64) -> C64 {
        self.eval(&self.right, r)
    }

    pub fn u_left(&self, r: f64) -> C64 {
        self.eval(&self.left, r)
    }

    /// Far-left amplitudes (α, β) of u_R = αe^{ikr} + βe^{-ikr}.
    pub fn right_far_left(&self) -> [C64; 2] {
        self.right[0]
    }

    /// Far-right amplitudes (γ, δ) of u_L = γe^{ikr} + δe^{-ikr}.
    pub fn left_far_right(&self) -> [C64; 2] {
        *self.left.last().expect("at least one region")
    }

    pub fn wronskian(&self) -> C64 {
        2.0 * I * self.k() * self.left_far_right()[1]
    }

    /// Retarded Green function of the full problem.
    pub fn green(&self, r: f64, r_prime: f64) -> C64 {
        let (lo, hi) = if r <= r_prime { (r, r_prime) } else { (r_prime, r) };
        2.0 * self.u_left(lo) * self.u_right(hi) / self.wronskian()
    }

    fn channel_norm(&self, channel: Channel) -> C64 {
        let n = (2.0 * std::f64::consts::PI * self.k()).sqrt();
        match channel {
            Channel::Left => ONE / (self.right_far_left()[0] * n),
            Channel::Right => ONE / (self.left_far_right()[1] * n),
        }
    }

    /// Energy-normalized scattering state with unit incident amplitude in `channel`.
    pub fn scattering_state(&self, channel: Channel, r: f64) -> C64 {
        let raw = match channel {
            Channel::Left => self.u_right(r),
            Channel::Right => self.u_left(r),
        };
        raw * self.channel_norm(channel)
    }

    /// Region-wise coefficients of the energy-normalized scattering state.
    pub fn scattering_coeffs(&self, channel: Channel) -> Vec<[C64; 2]> {
        let s = self.channel_norm(channel);
        let src = match channel {
            Channel::Left => &self.right,
            Channel::Right => &self.left,
        };
        src.iter().map(|ab| [ab[0] * s, ab[1] * s]).collect()
    }

    pub fn coeffs_right(&self) -> &[[C64; 2]] {
        &self.right
    }

    pub fn coeffs_left(&self) -> &[[C64; 2]] {
        &self.left
    }

    /// Lead-ordered scattering matrix [[r, t'], [t, r']].
    pub fn smatrix(&self) -> Mat2 {
        let [alpha, beta] = self.right_far_left();
        let [gamma, delta] = self.left_far_right();
        [[beta / alpha, ONE / delta], [ONE / alpha, gamma / delta]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BathSolver {
    Exact,
    Nystrom { points: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BathOptions {
    pub solver: BathSolver,
    /// Points at which ψ̃ is sampled into the table (may be empty).
    pub grid: Vec<f64>,
    pub i_epsilon: f64,
    /// Relative tolerance of the Q-orthogonality check.
    pub q_tolerance: f64,
}

impl Default for BathOptions {
    fn default() -> Self {
        BathOptions { solver: BathSolver::Exact, grid: Vec::new(), i_epsilon: 0.0, q_tolerance: 1e-8 }
    }
}

/// P-space scattering states at one energy, reduced to what the few-mode operators need.
#[derive(Clone, Debug)]
pub struct BathStateTable {
    pub energy: f64,
    pub i_epsilon: f64,
    pub k: C64,
    pub solver: BathSolver,
    /// Mode indices and support of the basis the states were projected against.
    pub selector: Vec<usize>,
    pub mode_support: (f64, f64),
    /// ψ̃_m(x) indexed [boundary][channel], boundaries (x_a, x_b).
    pub boundary: Mat2,
    /// P-space Green function between the boundaries, G̃(x, y).
    pub p_green: Mat2,
    /// ⟨k_m|V|ψ̃_m'⟩ including delta barriers, indexed [m][m'].
    pub v_elements: Mat2,
    pub grid: Vec<f64>,
    /// ψ̃ sampled on `grid`, indexed by channel.
    pub samples: Vec<[C64; 2]>,
    /// max_λ,m |⟨χ_λ|ψ̃_m⟩| relative to the scale of ⟨χ_λ|ψ_m⟩.
    pub q_residual: f64,
    /// Worst relative flux balance defect over both channels.
    pub flux_defect: f64,
}

/// Bath states by the selected solver.
pub fn bath_states(spec: &PotentialSpec, basis: &SystemBasis, energy: f64, opts: &BathOptions) -> Result<BathStateTable> {
    if !(energy > 0.0) {
        return Err(Error::domain(format!("bath states need E > 0, got {energy}")));
    }
    let table = match opts.solver {
        BathSolver::Exact => {
            let h = POLE_WINDOW * energy.max(1.0);
            if basis.modes.iter().any(|m| (energy - m.energy).abs() < h) {
                exact_table_across_pole(spec, basis, energy, h, opts)?
            } else {
                ExactBath::new(spec, basis, C64::new(energy, opts.i_epsilon))?.table(spec, &opts.grid)
            }
        }
        BathSolver::Nystrom { points } => nystrom::solve(spec, basis, C64::new(energy, opts.i_epsilon), points, &opts.grid)?,
    };
    if !(table.q_residual <= opts.q_tolerance) {
        return Err(Error::Accuracy { energy, residual: table.q_residual, tolerance: opts.q_tolerance });
    }
    Ok(table)
}

/// Relative distance to a mode energy below which exact bath states are interpolated.
pub const POLE_WINDOW: f64 = 1e-5;

/// The boundary reduction has a removable singularity at E = E_λ that costs about
/// ε·E/|E − E_λ| in accuracy. Inside the window the smooth bath data are interpolated
/// from four points at E ± h, E ± 2h.
fn exact_table_across_pole(
    spec: &PotentialSpec,
    basis: &SystemBasis,
    energy: f64,
    h: f64,
    opts: &BathOptions,
) -> Result<BathStateTable> {
    let nodes = [(-2.0, -1.0 / 6.0), (-1.0, 2.0 / 3.0), (1.0, 2.0 / 3.0), (2.0, -1.0 / 6.0)];
    let mut tables = Vec::with_capacity(4);
    for (offset, _) in nodes {
        let e = C64::new(energy + offset * h, opts.i_epsilon);
        tables.push(ExactBath::new(spec, basis, e)?.table(spec, &opts.grid));
    }
    let mix2 = |f: &dyn Fn(&BathStateTable) -> Mat2| -> Mat2 {
        let mut out = [[ZERO; 2]; 2];
        for (t, (_, w)) in tables.iter().zip(nodes) {
            out = mat2_add(&out, &mat2_scale(&f(t), c(w)));
        }
        out
    };
    let samples = (0..opts.grid.len())
        .map(|i| {
            let mut v = [ZERO; 2];
            for (t, (_, w)) in tables.iter().zip(nodes) {
                v[0] += w * t.samples[i][0];
                v[1] += w * t.samples[i][1];
            }
            v
        })
        .collect();
    let first = &tables[0];
    Ok(BathStateTable {
        energy,
        i_epsilon: opts.i_epsilon,
        k: (2.0 * C64::new(energy, opts.i_epsilon)).sqrt(),
        solver: BathSolver::Exact,
        selector: first.selector.clone(),
        mode_support: first.mode_support,
        boundary: mix2(&|t| t.boundary),
        p_green: mix2(&|t| t.p_green),
        v_elements: mix2(&|t| t.v_elements),
        grid: opts.grid.clone(),
        samples,
        q_residual: tables.iter().map(|t| t.q_residual).fold(0.0, f64::max),
        flux_defect: tables.iter().map(|t| t.flux_defect).fold(0.0, f64::max),
    })
}

/// Closed-form bath solution built on [`WaveSolutions`].
///
/// With H_λ(r) = ∫ χ_λ(r') G(r', r) dr' and h_λ its boundary values, Green's identity gives
/// c_λᵀ G(·, r) = (E − E_λ) H_λ(r) − χ_λ(r), which removes every pole at E = E_λ:
/// (I + Σ_λ h_λ c_λᵀ) ψ̃_bd = Ψ_bd, W_λ = c_λᵀ ψ̃_bd and ψ̃ = Ψ − Σ_λ W_λ H_λ.
#[derive(Clone, Debug)]
pub struct ExactBath {
    pub energy: C64,
    pub solutions: WaveSolutions,
    basis: SystemBasis,
    weights: Vec<[f64; 2]>,
    /// Coefficients of u_L and u_R inside the mode support.
    inner: [[C64; 2]; 2],
    /// (∫χ_λ u_L, ∫χ_λ u_R) over the support.
    mode_integrals: Vec<[C64; 2]>,
    /// Ψ[x][m]: full scattering states at the boundaries.
    pub full_boundary: Mat2,
    /// G(x, y): full Green function between the boundaries.
    pub green_boundary: Mat2,
    pub tilde_boundary: Mat2,
    pub p_green: Mat2,
    /// W[λ][m].
    pub couplings: Vec<[C64; 2]>,
    q_residual: f64,
}

/// ∫_s^e χ(r) e^{ipr} dr for s, e inside the mode support.
fn chi_exp(mode: &SystemMode, p: C64, s: f64, e: f64) -> C64 {
    let a = mode.support.0;
    let w = mode.omega;
    let plus = (-I * w * a).exp() * exp_integral(p + w, s, e);
    let minus = (I * w * a).exp() * exp_integral(p - w, s, e);
    mode.amplitude() * (plus - minus) / (2.0 * I)
}

/// ∫_s^e χ(r) (α e^{iqr} + β e^{-iqr}) dr.
fn chi_wave(mode: &SystemMode, ab: [C64; 2], q: C64, s: f64, e: f64) -> C64 {
    ab[0] * chi_exp(mode, q, s, e) + ab[1] * chi_exp(mode, -q, s, e)
}

impl ExactBath {
    pub fn new(spec: &PotentialSpec, basis: &SystemBasis, energy: C64) -> Result<Self> {
        let solutions = WaveSolutions::new(spec.profile(energy));
        let xs = basis.boundaries();
        let weights = basis.weights();
        let profile = &solutions.profile;
        let j_in = profile.region_of(0.5 * (xs[0] + xs[1]));
        let q_in = profile.region_q(j_in);
        let inner = [solutions.coeffs_left()[j_in], solutions.coeffs_right()[j_in]];
        let wr = solutions.wronskian();
        let mode_integrals: Vec<[C64; 2]> = basis
            .modes
            .iter()
            .map(|m| [chi_wave(m, inner[0], q_in, xs[0], xs[1]), chi_wave(m, inner[1], q_in, xs[0], xs[1])])
            .collect();

        let mut full_boundary = [[ZERO; 2]; 2];
        let mut green_boundary = [[ZERO; 2]; 2];
        for x in 0..2 {
            for ch in Channel::BOTH {
                full_boundary[x][ch.index()] = solutions.scattering_state(ch, xs[x]);
            }
            for y in 0..2 {
                green_boundary[x][y] = solutions.green(xs[x], xs[y]);
            }
        }
        // h_λ = (H_λ(x_a), H_λ(x_b)).
        let u_l = [solutions.u_left(xs[0]), solutions.u_left(xs[1])];
        let u_r = [solutions.u_right(xs[0]), solutions.u_right(xs[1])];
        let h: Vec<[C64; 2]> = mode_integrals.iter().map(|mi| [2.0 * u_l[0] * mi[1] / wr, 2.0 * u_r[1] * mi[0] / wr]).collect();
        let mut n2 = mat2_identity();
        for (hl, w) in h.iter().zip(&weights) {
            for x in 0..2 {
                for y in 0..2 {
                    n2[x][y] += hl[x] * w[y];
                }
            }
        }
        let n2_inv = mat2_inv(&n2).ok_or_else(|| Error::singular(energy.re, "boundary reduction is singular"))?;
        let tilde_boundary = mat2_mul(&n2_inv, &full_boundary);
        let p_green = mat2_mul(&n2_inv, &green_boundary);
        let couplings: Vec<[C64; 2]> = weights
            .iter()
            .map(|w| {
                let mut row = [ZERO; 2];
                for m in 0..2 {
                    row[m] = w[0] * tilde_boundary[0][m] + w[1] * tilde_boundary[1][m];
                }
                row
            })
            .collect();

        // Backward error of the boundary system, and Green's identity c_λᵀΨ = (E − E_λ)⟨χ_λ|Ψ⟩
        // checked against the closed-form overlaps.
        let back = mat2_sub(&mat2_mul(&n2, &tilde_boundary), &full_boundary);
        let mut q_residual =
            mat2_frobenius(&back) / (mat2_frobenius(&n2) * mat2_frobenius(&tilde_boundary) + mat2_frobenius(&full_boundary));
        let psi_inner = [solutions.scattering_coeffs(Channel::Left)[j_in], solutions.scattering_coeffs(Channel::Right)[j_in]];
        let psi_norm = mat2_frobenius(&full_boundary);
        for (mode, w) in basis.modes.iter().zip(&weights) {
            let cn = (w[0] * w[0] + w[1] * w[1]).sqrt();
            for m in 0..2 {
                let lhs = w[0] * full_boundary[0][m] + w[1] * full_boundary[1][m];
                let p = chi_wave(mode, psi_inner[m], q_in, xs[0], xs[1]);
                let rhs = (energy - mode.energy) * p;
                q_residual = q_residual.max((lhs - rhs).norm() / (cn * psi_norm));
            }
        }

        Ok(ExactBath {
            energy,
            solutions,
            basis: basis.clone(),
            weights,
            inner,
            mode_integrals,
            full_boundary,
            green_boundary,
            tilde_boundary,
            p_green,
            couplings,
            q_residual,
        })
    }

    pub fn k(&self) -> C64 {
        self.solutions.k()
    }

    /// H_λ(r) = ∫ χ_λ(r') G(r', r) dr'.
    fn mode_green(&self, l: usize, r: f64) -> C64 {
        let (a, b) = self.basis.support;
        let mode = &self.basis.modes[l];
        let wr = self.solutions.wronskian();
        let q = self.solutions.profile.region_q(self.solutions.profile.region_of(0.5 * (a + b)));
        let below = if r > a { chi_wave(mode, self.inner[0], q, a, r.min(b)) } else { ZERO };
        let above = if r < b { chi_wave(mode, self.inner[1], q, r.max(a), b) } else { ZERO };
        2.0 * (self.solutions.u_right(r) * below + self.solutions.u_left(r) * above) / wr
    }

    /// ψ̃_m(r) anywhere.
    pub fn psi_tilde(&self, channel: Channel, r: f64) -> C64 {
        let m = channel.index();
        let mut v = self.solutions.scattering_state(channel, r);
        for (l, w) in self.couplings.iter().enumerate() {
            v -= w[m] * self.mode_green(l, r);
        }
        v
    }

    /// Region-wise coefficients of ψ̃ valid on the part of each region outside the mode support.
    pub fn outside_coeffs(&self, channel: Channel) -> Vec<[C64; 2]> {
        let m = channel.index();
        let xs = self.basis.boundaries();
        let wr = self.solutions.wronskian();
        let mut kappa_l = ZERO;
        let mut kappa_r = ZERO;
        for (w, mi) in self.couplings.iter().zip(&self.mode_integrals) {
            kappa_l += 2.0 * w[m] * mi[1] / wr;
            kappa_r += 2.0 * w[m] * mi[0] / wr;
        }
        let base = self.solutions.scattering_coeffs(channel);
        let profile = &self.solutions.profile;
        let n = profile.region_count();
        (0..n)
            .map(|j| {
                let left_side = if j == 0 {
                    true
                } else if j == n - 1 {
                    false
                } else {
                    let mid = 0.5 * (profile.interfaces[j - 1].position + profile.interfaces[j].position);
                    mid < 0.5 * (xs[0] + xs[1])
                };
                if left_side {
                    let u = self.solutions.coeffs_left()[j];
                    [base[j][0] - kappa_l * u[0], base[j][1] - kappa_l * u[1]]
                } else {
                    let u = self.solutions.coeffs_right()[j];
                    [base[j][0] - kappa_r * u[0], base[j][1] - kappa_r * u[1]]
                }
            })
            .collect()
    }

    /// ⟨k_m|V|ψ̃_m'⟩ with analytic delta and layer contributions.
    pub fn v_elements(&self, spec: &PotentialSpec) -> Mat2 {
        let k = self.k();
        let mut out = [[ZERO; 2]; 2];
        let tilde: Vec<Vec<C64>> = spec
            .deltas
            .iter()
            .map(|d| Channel::BOTH.iter().map(|&ch| self.psi_tilde(ch, d.position)).collect())
            .collect();
        for (d, vals) in spec.deltas.iter().zip(&tilde) {
            let xi = spec.effective_delta_strength(d, self.energy);
            for bra in Channel::BOTH {
                let b = free_bra(bra, k, d.position);
                for ket in Channel::BOTH {
                    out[bra.index()][ket.index()] += xi * b * vals[ket.index()];
                }
            }
        }
        if spec.wave_kind.is_weighted() && !spec.layers.is_empty() {
            let profile = &self.solutions.profile;
            let norm = (2.0 * std::f64::consts::PI * k).sqrt();
            let coeffs = [self.outside_coeffs(Channel::Left), self.outside_coeffs(Channel::Right)];
            for j in 1..profile.region_count() - 1 {
                let s = profile.interfaces[j - 1].position;
                let e = profile.interfaces[j].position;
                let n = spec.index_at(0.5 * (s + e));
                if n == 1.0 {
                    continue;
                }
                let vt = (1.0 - n * n) * self.energy;
                let q = profile.region_q(j);
                for bra in Channel::BOTH {
                    let kk = k * bra.direction();
                    for ket in Channel::BOTH {
                        let ab = coeffs[ket.index()][j];
                        let integral = ab[0] * exp_integral(q - kk, s, e) + ab[1] * exp_integral(-q - kk, s, e);
                        out[bra.index()][ket.index()] += vt * integral / norm;
                    }
                }
            }
        }
        out
    }

    fn flux_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for ch in Channel::BOTH {
            let coeffs = self.outside_coeffs(ch);
            let first = coeffs[0];
            let last = *coeffs.last().expect("regions");
            let incoming = match ch {
                Channel::Left => first[0],
                Channel::Right => last[1],
            };
            let balance = incoming.norm_sqr() - first[1].norm_sqr() - last[0].norm_sqr();
            worst = worst.max(balance.abs() / incoming.norm_sqr());
        }
        worst
    }

    pub fn table(&self, spec: &PotentialSpec, grid: &[f64]) -> BathStateTable {
        let samples = grid
            .iter()
            .map(|&r| [self.psi_tilde(Channel::Left, r), self.psi_tilde(Channel::Right, r)])
            .collect();
        BathStateTable {
            energy: self.energy.re,
            i_epsilon: self.energy.im,
            k: self.k(),
            solver: BathSolver::Exact,
            selector: self.basis.selector(),
            mode_support: self.basis.support,
            boundary: self.tilde_boundary,
            p_green: self.p_green,
            v_elements: self.v_elements(spec),
            grid: grid.to_vec(),
            samples,
            q_residual: self.q_residual,
            flux_defect: self.flux_defect(),
        }
    }

    pub fn weights(&self) -> &[[f64; 2]] {
        &self.weights
    }
}
