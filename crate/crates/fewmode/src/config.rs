//! Run configuration documents and the shipped presets.
//!
//! Configs are TOML; every table key is addressable by its dotted path
//! (`geometry.eta`, `grid.count`, `atom.d`, ...).

use serde::{Deserialize, Serialize};

use crate::convergence::{mode_sequence, Ordering, OrderingScheme, Parity};
use crate::error::{Error, Result};
use crate::geometry::{DeltaBarrier, Layer, PotentialSpec, WaveKind};
use crate::interaction::{transmission_peak, AtomSpec};
use crate::modes::{BathOptions, BathSolver, Channel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub wave_kind: WaveKind,
    pub geometry: GeometryConfig,
    pub basis: BasisConfig,
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atom: Option<AtomConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    Empty {
        support: (f64, f64),
    },
    DoubleDelta {
        length: f64,
        strength: f64,
    },
    ThinMirror {
        length: f64,
        eta: f64,
    },
    DoubleCavity {
        n_outer: f64,
        n_mid: f64,
        t: f64,
    },
    Layered {
        support: (f64, f64),
        #[serde(default)]
        layers: Vec<Layer>,
        #[serde(default)]
        deltas: Vec<DeltaBarrier>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    /// Mode support; defaults to the (first) cavity of the geometry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<(f64, f64)>,
    /// Explicit mode indices; excludes `ordering`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<Ordering>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominant: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<Parity>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridVariable {
    Energy,
    Omega,
}

fn default_quadrature_factor() -> f64 {
    10.0
}

fn default_solver() -> BathSolver {
    BathSolver::Exact
}

fn default_q_tolerance() -> f64 {
    1e-8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub variable: GridVariable,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    /// Sample cell midpoints instead of the closed interval.
    #[serde(default)]
    pub midpoints: bool,
    /// Number of spatial samples of ψ̃ across the mode support (0 disables).
    #[serde(default)]
    pub spatial_count: usize,
    /// E_max of the coupling table for the quadrature route, in units of the largest grid energy.
    #[serde(default = "default_quadrature_factor")]
    pub quadrature_factor: f64,
    #[serde(default = "default_solver")]
    pub solver: BathSolver,
    #[serde(default = "default_q_tolerance")]
    pub q_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_a: Option<f64>,
    /// Frequency window in which ω_a is placed on the empty-cavity transmission peak.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonant_with_peak: Option<(f64, f64)>,
    pub d: f64,
    pub r_a: f64,
}

fn default_channel() -> Channel {
    Channel::Left
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub b_in: f64,
    #[serde(default = "default_channel")]
    pub channel: Channel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Mirror parameter of a thin-mirror cavity, or ξ of a double delta.
    Eta,
    NMid,
    NOuter,
    D,
    OmegaA,
    BIn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

fn default_matrices() -> Vec<String> {
    vec!["full".into(), "io".into(), "bg".into()]
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_matrices")]
    pub matrices: Vec<String>,
    /// Emit γ_S, δ_LS and κ^(T) when an atom is present.
    #[serde(default = "yes")]
    pub parameters: bool,
    /// Emit the exact transmission alongside.
    #[serde(default = "yes")]
    pub oracle: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { matrices: default_matrices(), parameters: true, oracle: true, csv: None }
    }
}

/// A config with every derived quantity made explicit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub spec: PotentialSpec,
    pub support: (f64, f64),
    pub selector: Vec<usize>,
    pub grid: Vec<f64>,
    pub atom: Option<AtomSpec>,
}

impl ResolvedRun {
    pub fn bath_options(&self) -> BathOptions {
        let (a, b) = self.support;
        let n = self.config.grid.spatial_count;
        let grid = if n < 2 {
            Vec::new()
        } else {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        };
        BathOptions { solver: self.config.grid.solver, grid, i_epsilon: 0.0, q_tolerance: self.config.grid.q_tolerance }
    }

    /// Grid values converted to frequencies.
    pub fn omegas(&self) -> Vec<f64> {
        match self.config.grid.variable {
            GridVariable::Omega => self.grid.clone(),
            GridVariable::Energy => self.grid.iter().map(|e| (2.0 * e).sqrt()).collect(),
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        match self.config.grid.variable {
            GridVariable::Energy => self.grid.clone(),
            GridVariable::Omega => self.grid.iter().map(|w| 0.5 * w * w).collect(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(&path, e.into_inner().message().to_string())
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn geometry(&self) -> Result<PotentialSpec> {
        let spec = match &self.geometry {
            GeometryConfig::Empty { support } => {
                let mut s = PotentialSpec::empty(self.wave_kind);
                s.support = *support;
                s
            }
            GeometryConfig::DoubleDelta { length, strength } => {
                positive("geometry.length", *length)?;
                PotentialSpec::double_delta(self.wave_kind, *length, *strength)
            }
            GeometryConfig::ThinMirror { length, eta } => {
                self.require_maxwell("geometry.kind")?;
                positive("geometry.length", *length)?;
                let mut s = PotentialSpec::thin_mirror_cavity(*length, *eta);
                s.wave_kind = self.wave_kind;
                s
            }
            GeometryConfig::DoubleCavity { n_outer, n_mid, t } => {
                self.require_maxwell("geometry.kind")?;
                positive("geometry.t", *t)?;
                positive("geometry.n_outer", *n_outer)?;
                positive("geometry.n_mid", *n_mid)?;
                let mut s = PotentialSpec::double_cavity(*n_outer, *n_mid, *t);
                s.wave_kind = self.wave_kind;
                s
            }
            GeometryConfig::Layered { support, layers, deltas } => PotentialSpec {
                wave_kind: self.wave_kind,
                layers: layers.clone(),
                deltas: deltas.clone(),
                support: *support,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    fn require_maxwell(&self, path: &str) -> Result<()> {
        if !self.wave_kind.is_maxwell() {
            return Err(Error::config(path, "dielectric geometries need a Maxwell wave kind"));
        }
        Ok(())
    }

    pub fn mode_support(&self) -> Result<(f64, f64)> {
        if let Some(s) = self.basis.support {
            return Ok(s);
        }
        match &self.geometry {
            GeometryConfig::DoubleDelta { length, .. } | GeometryConfig::ThinMirror { length, .. } => {
                Ok((-0.5 * length, 0.5 * length))
            }
            GeometryConfig::DoubleCavity { .. } => Ok((-0.5, 0.5)),
            _ => Err(Error::config("basis.support", "required for this geometry kind")),
        }
    }

    pub fn selector(&self) -> Result<Vec<usize>> {
        let b = &self.basis;
        match (&b.selector, b.ordering) {
            (Some(_), Some(_)) => Err(Error::config("basis.selector", "give either a selector or an ordering, not both")),
            (Some(sel), None) => {
                if sel.contains(&0) {
                    return Err(Error::config("basis.selector", "mode indices start at 1"));
                }
                Ok(sel.clone())
            }
            (None, Some(ordering)) => {
                let count = b.count.ok_or_else(|| Error::config("basis.count", "required with an ordering"))?;
                if count == 0 {
                    return Err(Error::config("basis.count", "must be at least 1"));
                }
                let scheme = OrderingScheme {
                    ordering,
                    dominant: b.dominant.unwrap_or(1),
                    parity: b.parity.unwrap_or(Parity::Odd),
                };
                mode_sequence(&scheme, count)
            }
            (None, None) => Ok(Vec::new()),
        }
    }

    pub fn grid_values(&self) -> Result<Vec<f64>> {
        let g = &self.grid;
        if g.count == 0 {
            return Err(Error::config("grid.count", "must be positive"));
        }
        if !(g.min > 0.0) || !(g.max >= g.min) || !g.max.is_finite() {
            return Err(Error::config("grid.min", "grid needs 0 < min <= max"));
        }
        if !(g.quadrature_factor > 1.0) {
            return Err(Error::config("grid.quadrature_factor", "must exceed 1"));
        }
        let n = g.count;
        Ok(if g.midpoints {
            (0..n).map(|i| g.min + (g.max - g.min) * (i as f64 + 0.5) / n as f64).collect()
        } else if n == 1 {
            vec![g.min]
        } else {
            (0..n).map(|i| g.min + (g.max - g.min) * i as f64 / (n - 1) as f64).collect()
        })
    }

    pub fn atom_spec(&self, spec: &PotentialSpec) -> Result<Option<AtomSpec>> {
        let Some(a) = &self.atom else { return Ok(None) };
        if !spec.wave_kind.is_maxwell() {
            return Err(Error::config("atom", "an atom needs a Maxwell wave kind"));
        }
        let omega_a = match (a.omega_a, a.resonant_with_peak) {
            (Some(w), None) => w,
            (None, Some((lo, hi))) => transmission_peak(spec, lo, hi)
                .map_err(|e| Error::config("atom.resonant_with_peak", e.to_string()))?,
            _ => return Err(Error::config("atom.omega_a", "give exactly one of omega_a and resonant_with_peak")),
        };
        positive("atom.omega_a", omega_a)?;
        Ok(Some(AtomSpec { omega_a, d: a.d, r_a: a.r_a }))
    }

    /// Resolve geometry, basis, grid and atom.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let spec = self.geometry()?;
        let support = self.mode_support()?;
        let selector = self.selector()?;
        let grid = self.grid_values()?;
        let atom = self.atom_spec(&spec)?;
        if let Some(a) = &atom {
            if !(a.r_a > support.0 && a.r_a < support.1) {
                return Err(Error::config("atom.r_a", "atom must sit inside the mode support"));
            }
        }
        if self.drive.is_some() && atom.is_none() {
            return Err(Error::config("drive", "a drive needs an atom"));
        }
        for m in &self.outputs.matrices {
            if !matches!(m.as_str(), "full" | "io" | "bg") {
                return Err(Error::config("outputs.matrices", format!("unknown matrix `{m}`")));
            }
        }
        Ok(ResolvedRun { config: self.clone(), spec, support, selector, grid, atom })
    }

    /// Copy of this config with one sweep value applied.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<RunConfig> {
        let mut c = self.clone();
        c.sweep = None;
        let bad = |what: &str| Error::config("sweep.parameter", format!("`{what}` does not apply to this config"));
        match parameter {
            SweepParameter::Eta => match &mut c.geometry {
                GeometryConfig::ThinMirror { eta, .. } => *eta = value,
                GeometryConfig::DoubleDelta { strength, .. } => *strength = value,
                _ => return Err(bad("eta")),
            },
            SweepParameter::NMid => match &mut c.geometry {
                GeometryConfig::DoubleCavity { n_mid, .. } => *n_mid = value,
                _ => return Err(bad("n_mid")),
            },
            SweepParameter::NOuter => match &mut c.geometry {
                GeometryConfig::DoubleCavity { n_outer, .. } => *n_outer = value,
                _ => return Err(bad("n_outer")),
            },
            SweepParameter::D => match &mut c.atom {
                Some(a) => a.d = value,
                None => return Err(bad("d")),
            },
            SweepParameter::OmegaA => match &mut c.atom {
                Some(a) => {
                    a.omega_a = Some(value);
                    a.resonant_with_peak = None;
                }
                None => return Err(bad("omega_a")),
            },
            SweepParameter::BIn => match &mut c.drive {
                Some(d) => d.b_in = value,
                None => return Err(bad("b_in")),
            },
        }
        Ok(c)
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::config(path, format!("must be positive, got {v}")));
    }
    Ok(())
}

/// Presets shipped with the library.
pub const PRESETS: &[(&str, &str)] = &[
    ("double-delta-background", include_str!("../presets/double-delta-background.toml")),
    ("double-delta-one-mode", include_str!("../presets/double-delta-one-mode.toml")),
    ("double-delta-two-modes", include_str!("../presets/double-delta-two-modes.toml")),
    ("double-delta-hundred-modes", include_str!("../presets/double-delta-hundred-modes.toml")),
    ("double-delta-nystrom", include_str!("../presets/double-delta-nystrom.toml")),
    ("thin-mirror-single-mode-map", include_str!("../presets/thin-mirror-single-mode-map.toml")),
    ("thin-mirror-atom-good-cavity", include_str!("../presets/thin-mirror-atom-good-cavity.toml")),
    ("thin-mirror-atom-intermediate", include_str!("../presets/thin-mirror-atom-intermediate.toml")),
    ("thin-mirror-atom-bad-cavity", include_str!("../presets/thin-mirror-atom-bad-cavity.toml")),
    ("thin-mirror-atom-eta-sweep", include_str!("../presets/thin-mirror-atom-eta-sweep.toml")),
    ("thin-mirror-atom-strong", include_str!("../presets/thin-mirror-atom-strong.toml")),
    ("thin-mirror-atom-multimode-counting-up", include_str!("../presets/thin-mirror-atom-multimode-counting-up.toml")),
    ("thin-mirror-atom-multimode-symmetric", include_str!("../presets/thin-mirror-atom-multimode-symmetric.toml")),
    ("double-cavity-nmid-sweep", include_str!("../presets/double-cavity-nmid-sweep.toml")),
    ("double-cavity-atom-nmid-sweep", include_str!("../presets/double-cavity-atom-nmid-sweep.toml")),
    ("double-cavity-drive-sweep", include_str!("../presets/double-cavity-drive-sweep.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::config("--preset", format!("unknown preset `{name}`")))?;
    RunConfig::from_toml(text)
}
