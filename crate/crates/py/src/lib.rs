//! Python module `qlre`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qlre_core::run::run;
use qlre_core::scenario::{self, ScenarioConfig};
use qlre_core::{entanglement, oracle, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::UnsupportedConfiguration(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Runs a scenario given as JSON.
///
/// Returns a dict with `times`, `series` (column name to list) and
/// `summary` (the run summary as a JSON string).
#[pyfunction]
fn simulate<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ScenarioConfig::from_json(config_json).map_err(to_py)?;
    let out = py.detach(|| run(&cfg)).map_err(to_py)?;
    let series = PyDict::new(py);
    for (name, s) in out.columns.iter().zip(&out.series) {
        series.set_item(name, s.clone())?;
    }
    let dict = PyDict::new(py);
    dict.set_item("times", out.times.clone())?;
    dict.set_item("series", series)?;
    let summary = serde_json::to_string(&out.summary)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    dict.set_item("summary", summary)?;
    Ok(dict)
}

/// Scenario configs of a named preset, as JSON strings.
#[pyfunction]
fn preset(name: &str) -> PyResult<Vec<String>> {
    Ok(scenario::preset(name)
        .map_err(to_py)?
        .iter()
        .map(ScenarioConfig::to_json_pretty)
        .collect())
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    scenario::PRESET_NAMES.to_vec()
}

/// Mean thermal occupation of a mode at `omega0_over_2pi_hz` and `kelvin`.
#[pyfunction]
fn bose_einstein_nbar(omega0_over_2pi_hz: f64, kelvin: f64) -> PyResult<f64> {
    scenario::bose_einstein_nbar(omega0_over_2pi_hz, kelvin).map_err(to_py)
}

/// Steady concurrence of the outer spins of a `1 - n - 1` chain.
#[pyfunction]
fn concurrence_analytic(n: usize) -> f64 {
    oracle::concurrence_analytic(n)
}

/// Dark-state weight of the `1 - n - 1` chain steady state.
#[pyfunction]
fn dark_state_weight(n: usize) -> f64 {
    oracle::x_dark(n)
}

#[pyfunction]
fn eof_from_concurrence(c: f64) -> PyResult<f64> {
    entanglement::eof_from_concurrence(c).map_err(to_py)
}

#[pymodule]
fn qlre(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(bose_einstein_nbar, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(dark_state_weight, m)?)?;
    m.add_function(wrap_pyfunction!(eof_from_concurrence, m)?)?;
    Ok(())
}
