//! Python module `fewmode`.

use std::path::PathBuf;

use fewmode::config::{preset, preset_names, RunConfig};
use fewmode::convergence::{self, Ordering, OrderingScheme, Parity, SeparableFixture, Spectrum};
use fewmode::geometry::{PotentialSpec, WaveKind};
use fewmode::interaction::{self, AtomSpec};
use fewmode::modes::{dirichlet_modes, BathOptions, SystemBasis};
use fewmode::run;
use fewmode::scattering::{self, SMatrix};
use fewmode::verify::{run_verify, ToleranceProfile};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: fewmode::Error) -> PyErr {
    match e {
        fewmode::Error::Config { .. } | fewmode::Error::Validation(_) | fewmode::Error::Domain(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn wave_kind(name: &str) -> PyResult<WaveKind> {
    match name {
        "schroedinger" => Ok(WaveKind::Schroedinger),
        "maxwell_rwa" => Ok(WaveKind::MaxwellRwa),
        "sve" => Ok(WaveKind::Sve),
        _ => Err(PyValueError::new_err(format!("unknown wave kind `{name}`"))),
    }
}

fn matrix(s: &SMatrix) -> Vec<Vec<Complex64>> {
    s.entries.iter().map(|r| r.to_vec()).collect()
}

/// A potential or dielectric geometry.
#[pyclass(name = "Potential", from_py_object)]
#[derive(Clone)]
struct PyPotential {
    inner: PotentialSpec,
}

#[pymethods]
impl PyPotential {
    #[staticmethod]
    fn double_delta(wave_kind_name: &str, length: f64, strength: f64) -> PyResult<Self> {
        Ok(PyPotential { inner: PotentialSpec::double_delta(wave_kind(wave_kind_name)?, length, strength) })
    }

    #[staticmethod]
    fn thin_mirror(length: f64, eta: f64) -> Self {
        PyPotential { inner: PotentialSpec::thin_mirror_cavity(length, eta) }
    }

    #[staticmethod]
    fn double_cavity(n_outer: f64, n_mid: f64, t: f64) -> Self {
        PyPotential { inner: PotentialSpec::double_cavity(n_outer, n_mid, t) }
    }

    #[staticmethod]
    fn empty(wave_kind_name: &str) -> PyResult<Self> {
        Ok(PyPotential { inner: PotentialSpec::empty(wave_kind(wave_kind_name)?) })
    }

    #[getter]
    fn support(&self) -> (f64, f64) {
        self.inner.support
    }

    /// Exact S-matrix [[r, t'], [t, r']] at energy E.
    fn oracle(&self, energy: f64) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(matrix(&scattering::transfer_matrix_oracle(&self.inner, energy, None).map_err(err)?))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Potential({:?}, {} layers, {} deltas)", self.inner.wave_kind, self.inner.layers.len(), self.inner.deltas.len())
    }
}

/// Dirichlet system modes on a support interval.
#[pyclass(name = "Basis", from_py_object)]
#[derive(Clone)]
struct PyBasis {
    inner: SystemBasis,
}

#[pymethods]
impl PyBasis {
    #[new]
    fn new(potential: PyRef<'_, PyPotential>, support: (f64, f64), selector: Vec<usize>) -> PyResult<Self> {
        Ok(PyBasis { inner: dirichlet_modes(&potential.inner, support, &selector).map_err(err)? })
    }

    #[getter]
    fn selector(&self) -> Vec<usize> {
        self.inner.selector()
    }

    #[getter]
    fn omegas(&self) -> Vec<f64> {
        self.inner.omegas()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A two-level atom with transition frequency ω_a, dipole d, at position r_a.
#[pyclass(name = "Atom", from_py_object)]
#[derive(Clone)]
struct PyAtom {
    inner: AtomSpec,
}

#[pymethods]
impl PyAtom {
    #[new]
    fn new(omega_a: f64, d: f64, r_a: f64) -> Self {
        PyAtom { inner: AtomSpec { omega_a, d, r_a } }
    }

    #[getter]
    fn omega_a(&self) -> f64 {
        self.inner.omega_a
    }
}

/// S_full, S_io and S_bg at energy E, plus Γ and the couplings.
#[pyfunction]
fn few_mode(py: Python<'_>, potential: PyRef<'_, PyPotential>, basis: PyRef<'_, PyBasis>, energy: f64) -> PyResult<Py<PyAny>> {
    let p = scattering::few_mode_point(&potential.inner, &basis.inner, energy, &BathOptions::default()).map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("full", matrix(&p.full))?;
    d.set_item("io", matrix(&p.io))?;
    d.set_item("bg", matrix(&p.bg))?;
    let n = p.gamma.gamma.nrows();
    let gamma: Vec<Vec<Complex64>> = (0..n).map(|i| (0..n).map(|j| p.gamma.gamma[(i, j)]).collect()).collect();
    d.set_item("gamma", gamma)?;
    let w: Vec<Vec<Complex64>> = p.couplings.values.iter().map(|r| r.to_vec()).collect();
    d.set_item("couplings", w)?;
    Ok(d.into_any().unbind())
}

/// Linear atom-cavity spectrum at frequency ω.
#[pyfunction]
fn atom_spectrum(
    py: Python<'_>,
    potential: PyRef<'_, PyPotential>,
    basis: PyRef<'_, PyBasis>,
    atom: PyRef<'_, PyAtom>,
    omega: f64,
) -> PyResult<Py<PyAny>> {
    let p = interaction::atom_point(&potential.inner, &basis.inner, &atom.inner, omega, &BathOptions::default()).map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("full", matrix(&p.full))?;
    d.set_item("io", matrix(&p.io))?;
    d.set_item("bg", matrix(&p.free.bg))?;
    d.set_item("gamma_s", p.response.gamma_s)?;
    d.set_item("delta_ls", p.response.delta_ls)?;
    d.set_item("kappa_t", p.kappa_t)?;
    Ok(d.into_any().unbind())
}

#[pyfunction]
fn linear_dispersion_oracle(potential: PyRef<'_, PyPotential>, atom: PyRef<'_, PyAtom>, energy: f64) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(matrix(&interaction::linear_dispersion_oracle(&potential.inner, &atom.inner, energy).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (ordering, n, dominant = 1, parity = "odd"))]
fn mode_sequence(ordering: &str, n: usize, dominant: usize, parity: &str) -> PyResult<Vec<usize>> {
    let ordering = match ordering {
        "symmetric" | "symmetric_about_dominant" => Ordering::SymmetricAboutDominant,
        "counting_up" => Ordering::CountingUp,
        _ => return Err(PyValueError::new_err(format!("unknown ordering `{ordering}`"))),
    };
    let parity = match parity {
        "odd" => Parity::Odd,
        "even" => Parity::Even,
        "all" => Parity::All,
        _ => return Err(PyValueError::new_err(format!("unknown parity `{parity}`"))),
    };
    convergence::mode_sequence(&OrderingScheme { ordering, dominant, parity }, n).map_err(err)
}

#[pyfunction]
fn few_mode_deviation(grid: Vec<f64>, few: Vec<Complex64>, reference: Vec<Complex64>, zero: Vec<Complex64>) -> PyResult<f64> {
    let s = |values| Spectrum { grid: grid.clone(), values };
    convergence::few_mode_deviation(&s(few), &s(reference), &s(zero)).map_err(err)
}

#[pyfunction]
fn mode_sum_divergence(x: f64, n: usize) -> PyResult<f64> {
    convergence::mode_sum_divergence(x, n).map_err(err)
}

/// (s, G1, G2, gᵀD⁻¹g*) of the separable cavity fixture with modes 1..=n.
#[pyfunction]
fn separable_sums(alpha: f64, beta: f64, w: f64, g_tilde: f64, length: f64, n: usize) -> PyResult<(f64, f64, f64, Complex64)> {
    let f = SeparableFixture::new(alpha, beta, w, g_tilde, length).map_err(err)?;
    let s = f.sums(n).map_err(err)?;
    Ok((s.s, s.g1, s.g2, s.shift))
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    preset_names()
}

/// Write the spectrum of a preset name or TOML config path into `out`; returns the files.
#[pyfunction]
fn run_spectrum(source: &str, out: PathBuf) -> PyResult<Vec<PathBuf>> {
    let cfg = if source.ends_with(".toml") {
        let text = std::fs::read_to_string(source).map_err(|e| PyValueError::new_err(e.to_string()))?;
        RunConfig::from_toml(&text).map_err(err)?
    } else {
        preset(source).map_err(err)?
    };
    Ok(run::run_spectrum(&cfg, &out).map_err(err)?.files)
}

/// Run a verification suite; returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (suite, strict = false))]
fn verify(suite: &str, strict: bool) -> PyResult<String> {
    let profile = if strict { ToleranceProfile::Strict } else { ToleranceProfile::Default };
    let report = run_verify(suite, profile).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "fewmode")]
fn fewmode_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPotential>()?;
    m.add_class::<PyBasis>()?;
    m.add_class::<PyAtom>()?;
    m.add_function(wrap_pyfunction!(few_mode, m)?)?;
    m.add_function(wrap_pyfunction!(atom_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(linear_dispersion_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(mode_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(few_mode_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(mode_sum_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(separable_sums, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(run_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
