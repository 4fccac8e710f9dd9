//! Config-driven runners writing CSV spectra and JSON manifests.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ResolvedRun, RunConfig};
use crate::error::{Error, Result};
use crate::interaction::{
    atom_couplings, atom_point, linear_dispersion_oracle, semiclassical_steady_state, Drive, DriveResponse,
    LinearResponse,
};
use crate::modes::{dirichlet_modes, Channel};
use crate::numerics::*;
use crate::scattering::{few_mode_point, transfer_matrix_oracle, SMatrix};

/// Everything computed at one grid point.
#[derive(Clone, Debug)]
pub struct SpectrumRow {
    pub x: f64,
    pub omega: f64,
    pub energy: f64,
    pub full: SMatrix,
    pub io: SMatrix,
    pub bg: SMatrix,
    /// The empty-cavity bg·io matrix when an atom is present.
    pub empty: Option<SMatrix>,
    pub response: Option<LinearResponse>,
    pub kappa_t: Option<f64>,
    pub oracle: Option<SMatrix>,
    pub drive: Option<DriveResponse>,
}

impl SpectrumRow {
    /// Input-output transmission, the bath-channel element s_io[1][0].
    pub fn t_io(&self) -> C64 {
        self.io.transmission()
    }

    /// |transmitted output|² / |b_in|² of the driven steady state.
    pub fn drive_transmission(&self, channel: Channel) -> Option<f64> {
        self.drive.map(|d| {
            let (inp, out) = match channel {
                Channel::Left => (0, 1),
                Channel::Right => (1, 0),
            };
            d.observable[out].norm_sqr() / d.b_in[inp].norm_sqr()
        })
    }
}

pub fn compute_spectrum(run: &ResolvedRun) -> Result<Vec<SpectrumRow>> {
    let basis = dirichlet_modes(&run.spec, run.support, &run.selector)?;
    let opts = run.bath_options();
    let omegas = run.omegas();
    let energies = run.energies();
    let want_oracle = run.config.outputs.oracle;
    let drive = run.config.drive.clone();
    (0..run.grid.len())
        .into_par_iter()
        .map(|i| {
            let (x, omega, energy) = (run.grid[i], omegas[i], energies[i]);
            let annotate = |e: Error| match e {
                Error::Config { .. } | Error::Validation(_) => e,
                other => Error::solver(energy, format!("grid point {i} ({x}): {other}")),
            };
            let row = match &run.atom {
                None => {
                    let p = few_mode_point(&run.spec, &basis, energy, &opts).map_err(annotate)?;
                    let oracle = if want_oracle { Some(transfer_matrix_oracle(&run.spec, energy, None)?) } else { None };
                    SpectrumRow {
                        x,
                        omega,
                        energy,
                        full: p.full,
                        io: p.io,
                        bg: p.bg,
                        empty: None,
                        response: None,
                        kappa_t: None,
                        oracle,
                        drive: None,
                    }
                }
                Some(atom) => {
                    let p = atom_point(&run.spec, &basis, atom, omega, &opts).map_err(annotate)?;
                    let oracle = if want_oracle {
                        Some(linear_dispersion_oracle(&run.spec, atom, energy).map_err(annotate)?)
                    } else {
                        None
                    };
                    let drive = match &drive {
                        None => None,
                        Some(dc) => {
                            let mut b_in = [ZERO; 2];
                            b_in[dc.channel.index()] = c(dc.b_in);
                            let g = atom_couplings(atom, &basis)?;
                            let d = Drive { omega_in: omega, b_in };
                            Some(
                                semiclassical_steady_state(&p.free.couplings, &p.free.d, &g, atom, &p.free.bg, &d)
                                    .map_err(annotate)?,
                            )
                        }
                    };
                    SpectrumRow {
                        x,
                        omega,
                        energy,
                        full: p.full,
                        io: p.io,
                        bg: p.free.bg,
                        empty: Some(p.free.full),
                        response: Some(p.response),
                        kappa_t: Some(p.kappa_t),
                        oracle,
                        drive,
                    }
                }
            };
            Ok(row)
        })
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

const ENTRIES: [(usize, usize, &str); 4] = [(0, 0, "00"), (0, 1, "01"), (1, 0, "10"), (1, 1, "11")];

pub fn csv_header(run: &ResolvedRun) -> Vec<String> {
    let cfg = &run.config;
    let mut h = vec![match cfg.grid.variable {
        crate::config::GridVariable::Energy => "energy".to_string(),
        crate::config::GridVariable::Omega => "omega".to_string(),
    }];
    for m in &cfg.outputs.matrices {
        for (_, _, tag) in ENTRIES {
            h.push(format!("s_{m}_{tag}_re"));
            h.push(format!("s_{m}_{tag}_im"));
        }
    }
    for m in ["full", "io", "bg"] {
        h.push(format!("t_{m}_abs2"));
    }
    if run.atom.is_some() && cfg.outputs.parameters {
        h.extend(["gamma_s", "delta_ls", "kappa_t"].map(String::from));
    }
    if cfg.outputs.oracle {
        h.push("t_oracle_abs2".into());
    }
    if run.atom.is_some() {
        h.push("t_empty_abs2".into());
    }
    if cfg.drive.is_some() {
        h.extend(
            ["b_in", "out_0_re", "out_0_im", "out_1_re", "out_1_im", "t_drive_abs2", "sigma_z", "residual"]
                .map(String::from),
        );
    }
    h
}

pub fn csv_record(run: &ResolvedRun, row: &SpectrumRow) -> Vec<String> {
    let cfg = &run.config;
    let mut r = vec![fmt(row.x)];
    for m in &cfg.outputs.matrices {
        let s = match m.as_str() {
            "full" => &row.full,
            "io" => &row.io,
            _ => &row.bg,
        };
        for (i, j, _) in ENTRIES {
            r.push(fmt(s.entries[i][j].re));
            r.push(fmt(s.entries[i][j].im));
        }
    }
    r.push(fmt(row.full.transmission().norm_sqr()));
    r.push(fmt(row.t_io().norm_sqr()));
    r.push(fmt(row.bg.transmission().norm_sqr()));
    if run.atom.is_some() && cfg.outputs.parameters {
        let resp = row.response.expect("atom rows carry a response");
        r.push(fmt(resp.gamma_s));
        r.push(fmt(resp.delta_ls));
        r.push(fmt(row.kappa_t.unwrap_or(0.0)));
    }
    if cfg.outputs.oracle {
        r.push(fmt(row.oracle.map_or(f64::NAN, |o| o.transmission().norm_sqr())));
    }
    if let Some(e) = row.empty {
        r.push(fmt(e.transmission().norm_sqr()));
    }
    if let (Some(dc), Some(d)) = (&cfg.drive, &row.drive) {
        r.push(fmt(dc.b_in));
        for z in d.observable {
            r.push(fmt(z.re));
            r.push(fmt(z.im));
        }
        r.push(fmt(row.drive_transmission(dc.channel).unwrap_or(f64::NAN)));
        r.push(fmt(d.sigma_z));
        r.push(fmt(d.residual));
    }
    r
}

pub fn write_csv(path: &Path, run: &ResolvedRun, rows: &[SpectrumRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(csv_header(run))?;
    for row in rows {
        w.write_record(csv_record(run, row))?;
    }
    w.flush()?;
    Ok(())
}

pub const CONVENTIONS: &[(&str, &str)] = &[
    ("units", "hbar = m = c = 1; E = k^2/2; omega = k"),
    ("length", "cavity length L = 1 unless the geometry block states otherwise"),
    ("free_waves", "k_0(r) = exp(ikr)/sqrt(2 pi k), energy normalized"),
    ("s_matrix", "lead order [[r, t'], [t, r']]; index 0 = left lead; s_x_10 is left-to-right transmission"),
    ("s_io", "resonant factor I - 2 pi i W^dagger D^-1 W between bath channels labeled by incident lead"),
    ("s_bg", "background factor including the lead exchange; s_full = s_bg * s_io"),
    ("t_io_abs2", "input-output transmission between bath channels, |s_io_10|^2"),
    ("atom", "g_l = -i d omega_a (2 omega_l)^(-1/2) chi_l(r_a); frequency normalized D and W in the rotating frame"),
    ("oracle", "transfer matrix; with an atom, a thin layer eta(omega) = -(omega_a/omega)^2 2 omega_a d^2/(omega^2 - omega_a^2)"),
    ("drive", "semiclassical steady state; out_* = S_bg b_out in lead order; t_drive_abs2 = |out_t|^2/|b_in|^2"),
    ("precision", "17 significant digits"),
];

#[derive(Serialize)]
struct Resolved<'a> {
    geometry: &'a crate::geometry::PotentialSpec,
    mode_support: (f64, f64),
    selector: &'a [usize],
    omega_a: Option<f64>,
    grid_points: usize,
}

pub fn manifest(run: &ResolvedRun, csv_name: &str, rows: usize) -> serde_json::Value {
    let g = &run.config.grid;
    json!({
        "name": run.config.name,
        "description": run.config.description,
        "software": { "package": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "config": run.config,
        "resolved": Resolved {
            geometry: &run.spec,
            mode_support: run.support,
            selector: &run.selector,
            omega_a: run.atom.map(|a| a.omega_a),
            grid_points: run.grid.len(),
        },
        "tolerances": {
            "q_orthogonality": g.q_tolerance,
            "quadrature_factor": g.quadrature_factor,
            "position": crate::geometry::POSITION_TOL,
            "pole_window": crate::modes::POLE_WINDOW,
            "d_pivot_ratio": crate::projection::MAX_D_PIVOT_RATIO,
        },
        "conventions": CONVENTIONS.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "csv": csv_name,
        "columns": csv_header(run),
        "rows": rows,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Files written by a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

pub fn run_spectrum(config: &RunConfig, out: &Path) -> Result<RunOutput> {
    let run = config.resolve()?;
    fs::create_dir_all(out)?;
    let stem = config.outputs.csv.clone().unwrap_or_else(|| format!("{}.csv", config.name));
    let rows = compute_spectrum(&run)?;
    let csv_path = out.join(&stem);
    write_csv(&csv_path, &run, &rows)?;
    let manifest_path = out.join(format!("{}.manifest.json", stem.trim_end_matches(".csv")));
    write_json(&manifest_path, &manifest(&run, &stem, rows.len()))?;
    Ok(RunOutput { files: vec![csv_path, manifest_path] })
}

fn grid_peak(rows: &[SpectrumRow]) -> Option<f64> {
    rows.iter()
        .max_by(|a, b| a.full.transmission().norm_sqr().total_cmp(&b.full.transmission().norm_sqr()))
        .map(|r| r.x)
}

/// One CSV and manifest per sweep value, plus `index.csv` and `index.json`.
pub fn run_sweep(config: &RunConfig, out: &Path) -> Result<RunOutput> {
    let sweep = config.sweep.clone().ok_or_else(|| Error::config("sweep", "a sweep block is required"))?;
    if sweep.values.is_empty() {
        return Err(Error::config("sweep.values", "at least one value is required"));
    }
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut entries = Vec::new();
    let mut index = csv::Writer::from_path(out.join("index.csv"))?;
    index.write_record(["index", "value", "csv", "omega_a", "peak_x"])?;
    for (i, &value) in sweep.values.iter().enumerate() {
        let cfg = config.with_parameter(sweep.parameter, value)?;
        let run = cfg.resolve()?;
        let rows = compute_spectrum(&run)?;
        let stem = format!("{}_{i:03}.csv", config.name);
        let csv_path = out.join(&stem);
        write_csv(&csv_path, &run, &rows)?;
        let manifest_path = out.join(format!("{}_{i:03}.manifest.json", config.name));
        write_json(&manifest_path, &manifest(&run, &stem, rows.len()))?;
        let omega_a = run.atom.map(|a| a.omega_a);
        let peak = grid_peak(&rows);
        index.write_record([
            i.to_string(),
            fmt(value),
            stem.clone(),
            omega_a.map_or(String::new(), fmt),
            peak.map_or(String::new(), fmt),
        ])?;
        entries.push(json!({ "index": i, "value": value, "csv": stem, "omega_a": omega_a, "peak_x": peak }));
        files.push(csv_path);
        files.push(manifest_path);
    }
    index.flush()?;
    let index_json = out.join("index.json");
    write_json(
        &index_json,
        &json!({
            "name": config.name,
            "parameter": sweep.parameter,
            "config": config,
            "entries": entries,
            "conventions": CONVENTIONS.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        }),
    )?;
    files.push(out.join("index.csv"));
    files.push(index_json);
    Ok(RunOutput { files })
}
