//! Dense Nyström solver for |ψ̃⟩ = |k_m⟩ + G₀ U |ψ̃⟩ with U = V − QH − HQ + QHQ.
//!
//! Acting on any ψ, with p_λ = ⟨χ_λ|ψ⟩,
//! U ψ = Ṽψ + Σ_d ξ_d ψ(r_d) δ_d − Σ_λ χ_λ (E_λ p_λ + Σ_x c_x ψ(x)) − Σ_λ p_λ Σ_x c_x δ_x.
//! Smooth parts use the composite trapezoid rule on a grid containing every breakpoint;
//! delta terms and G₀χ_λ are evaluated analytically.

use nalgebra::DMatrix;

use super::{free_bra, free_green, free_wave, BathSolver, BathStateTable, Channel, SystemBasis};
use crate::error::{Error, Result};
use crate::geometry::{PotentialSpec, POSITION_TOL};
use crate::numerics::*;

/// Pivot ratio above which the discretized operator is treated as singular.
pub const MAX_PIVOT_RATIO: f64 = 1e13;

struct Discretization {
    nodes: Vec<f64>,
    /// Trapezoid weight times Ṽ for the smooth potential.
    v_weight: Vec<C64>,
    /// Trapezoid weight restricted to the mode support.
    q_weight: Vec<f64>,
    deltas: Vec<(usize, C64)>,
    boundary: [usize; 2],
}

fn node_index(nodes: &[f64], x: f64) -> usize {
    nodes
        .iter()
        .position(|&r| (r - x).abs() <= POSITION_TOL)
        .expect("breakpoint is a grid node")
}

fn discretize(spec: &PotentialSpec, basis: &SystemBasis, energy: C64, points: usize) -> Discretization {
    let (xa, xb) = basis.support;
    let mut breaks = vec![spec.support.0.min(xa), spec.support.1.max(xb), xa, xb];
    for l in &spec.layers {
        breaks.push(l.start);
        breaks.push(l.end);
    }
    breaks.extend(spec.deltas.iter().map(|d| d.position));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() <= POSITION_TOL);

    let span = breaks[breaks.len() - 1] - breaks[0];
    let h = span / points.max(2) as f64;
    let mut nodes = vec![breaks[0]];
    let mut v_weight = vec![ZERO];
    let mut q_weight = vec![0.0];
    for pair in breaks.windows(2) {
        let (s, e) = (pair[0], pair[1]);
        let n = ((e - s) / h).ceil().max(1.0) as usize;
        let step = (e - s) / n as f64;
        let mid = 0.5 * (s + e);
        let vt = if spec.wave_kind.is_weighted() {
            let n_idx = spec.index_at(mid);
            (1.0 - n_idx * n_idx) * energy
        } else {
            ZERO
        };
        let inside = mid > xa && mid < xb;
        for i in 1..=n {
            let last = nodes.len() - 1;
            v_weight[last] += vt * 0.5 * step;
            if inside {
                q_weight[last] += 0.5 * step;
            }
            nodes.push(if i == n { e } else { s + i as f64 * step });
            v_weight.push(vt * 0.5 * step);
            q_weight.push(if inside { 0.5 * step } else { 0.0 });
        }
    }
    let deltas = spec
        .deltas
        .iter()
        .map(|d| (node_index(&nodes, d.position), spec.effective_delta_strength(d, energy)))
        .collect();
    let boundary = [node_index(&nodes, xa), node_index(&nodes, xb)];
    Discretization { nodes, v_weight, q_weight, deltas, boundary }
}

/// Row of the discretized G₀U at an arbitrary point r.
fn kernel_row(d: &Discretization, basis: &SystemBasis, k: C64, r: f64, mode_rows: &[Vec<f64>]) -> Vec<C64> {
    let n = d.nodes.len();
    let mut row: Vec<C64> = (0..n).map(|j| free_green(k, r, d.nodes[j]) * d.v_weight[j]).collect();
    for &(j, xi) in &d.deltas {
        row[j] += xi * free_green(k, r, d.nodes[j]);
    }
    let xs = basis.boundaries();
    let g_bd = [free_green(k, r, xs[0]), free_green(k, r, xs[1])];
    for (mode, qrow) in basis.modes.iter().zip(mode_rows) {
        let w = mode.surface_weights();
        let gchi = mode.free_green_applied(k, r);
        let gsurf = w[0] * g_bd[0] + w[1] * g_bd[1];
        let coef = gchi * mode.energy + gsurf;
        for j in 0..n {
            if qrow[j] != 0.0 {
                row[j] -= coef * qrow[j];
            }
        }
        row[d.boundary[0]] -= gchi * w[0];
        row[d.boundary[1]] -= gchi * w[1];
    }
    row
}

pub(crate) fn solve(
    spec: &PotentialSpec,
    basis: &SystemBasis,
    energy: C64,
    points: usize,
    grid: &[f64],
) -> Result<BathStateTable> {
    spec.validate()?;
    let k = (2.0 * energy).sqrt();
    let d = discretize(spec, basis, energy, points);
    let n = d.nodes.len();
    let mode_rows: Vec<Vec<f64>> = basis
        .modes
        .iter()
        .map(|m| d.nodes.iter().zip(&d.q_weight).map(|(&r, &w)| w * m.value_at(r)).collect())
        .collect();

    let mut a = DMatrix::<C64>::identity(n, n);
    for i in 0..n {
        let row = kernel_row(&d, basis, k, d.nodes[i], &mode_rows);
        for (j, v) in row.into_iter().enumerate() {
            a[(i, j)] -= v;
        }
    }
    let xs = basis.boundaries();
    let mut rhs = DMatrix::<C64>::zeros(n, 4);
    for i in 0..n {
        let r = d.nodes[i];
        rhs[(i, 0)] = free_wave(Channel::Left, k, r);
        rhs[(i, 1)] = free_wave(Channel::Right, k, r);
        rhs[(i, 2)] = free_green(k, r, xs[0]);
        rhs[(i, 3)] = free_green(k, r, xs[1]);
    }
    let lu = a.lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
    let pmax = pivots.iter().cloned().fold(0.0, f64::max);
    let pmin = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(pmin > 0.0) || pmax / pmin > MAX_PIVOT_RATIO {
        return Err(Error::solver(energy.re, format!("ill-conditioned Nyström system, pivot ratio {:e}", pmax / pmin)));
    }
    let sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::solver(energy.re, "Nyström system is singular"))?;
    if sol.iter().any(|z| !z.is_finite()) {
        return Err(Error::solver(energy.re, "non-finite Nyström solution"));
    }

    let mut boundary = [[ZERO; 2]; 2];
    let mut p_green = [[ZERO; 2]; 2];
    for x in 0..2 {
        for m in 0..2 {
            boundary[x][m] = sol[(d.boundary[x], m)];
        }
        for y in 0..2 {
            p_green[x][y] = sol[(d.boundary[x], 2 + y)];
        }
    }

    let mut v_elements = [[ZERO; 2]; 2];
    for bra in Channel::BOTH {
        for ket in Channel::BOTH {
            let mut acc = ZERO;
            for j in 0..n {
                if d.v_weight[j] != ZERO {
                    acc += free_bra(bra, k, d.nodes[j]) * d.v_weight[j] * sol[(j, ket.index())];
                }
            }
            for &(j, xi) in &d.deltas {
                acc += xi * free_bra(bra, k, d.nodes[j]) * sol[(j, ket.index())];
            }
            v_elements[bra.index()][ket.index()] = acc;
        }
    }

    let evaluate = |r: f64, m: usize| -> C64 {
        let row = kernel_row(&d, basis, k, r, &mode_rows);
        let ch = Channel::BOTH[m];
        free_wave(ch, k, r) + row.iter().enumerate().map(|(j, v)| v * sol[(j, m)]).sum::<C64>()
    };
    let samples = grid.iter().map(|&r| [evaluate(r, 0), evaluate(r, 1)]).collect();

    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for (mode, qrow) in basis.modes.iter().zip(&mode_rows) {
        for ch in Channel::BOTH {
            let m = ch.index();
            let p: C64 = (0..n).map(|j| qrow[j] * sol[(j, m)]).sum();
            worst = worst.max(p.norm());
            scale = scale.max(mode.free_overlap(ch, k).norm());
        }
    }

    let r0 = d.nodes[0] - 1.0;
    let r1 = d.nodes[n - 1] + 1.0;
    let inc = (ONE / (2.0 * std::f64::consts::PI * k).sqrt()).norm_sqr();
    let mut flux_defect = 0.0f64;
    for ch in Channel::BOTH {
        let m = ch.index();
        let left_in = if m == 0 { free_wave(ch, k, r0) } else { ZERO };
        let right_in = if m == 1 { free_wave(ch, k, r1) } else { ZERO };
        let out_l = (evaluate(r0, m) - left_in) * (I * k * r0).exp();
        let out_r = (evaluate(r1, m) - right_in) * (-I * k * r1).exp();
        flux_defect = flux_defect.max((inc - out_l.norm_sqr() - out_r.norm_sqr()).abs() / inc);
    }

    Ok(BathStateTable {
        energy: energy.re,
        i_epsilon: energy.im,
        k,
        solver: BathSolver::Nystrom { points },
        selector: basis.selector(),
        mode_support: basis.support,
        boundary,
        p_green,
        v_elements,
        grid: grid.to_vec(),
        samples,
        q_residual: worst / scale,
        flux_defect,
    })
}
