use std::path::Path;

use inflow_ns::fields::{self, NormParams};
use inflow_ns::geometry::{domain_certificates, Domain};
use inflow_ns::grid::Grid as CoreGrid;
use inflow_ns::harness::{self, Mode};
use inflow_ns::momentum::FluidParams;
use inflow_ns::scenario::Scenario as CoreScenario;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: inflow_ns::Error) -> PyErr {
    match harness::exit_code(&e) {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn parse_mode(s: &str) -> PyResult<Mode> {
    match s {
        "solve" => Ok(Mode::Solve),
        "verify-estimates" => Ok(Mode::VerifyEstimates),
        "norms-only" => Ok(Mode::NormsOnly),
        "geometry-check" => Ok(Mode::GeometryCheck),
        _ => Err(PyValueError::new_err(format!("unknown mode {s:?}"))),
    }
}

// `shape` is the width of a rectangle, the lens amplitude or the disk scale
fn builtin(name: &str, shape: f64, height: f64) -> PyResult<Domain> {
    match name {
        "rectangle" => Domain::rectangle(shape, height),
        "lens" => Domain::lens(height, shape),
        "disk" => Domain::disk(height, shape),
        _ => return Err(PyValueError::new_err(format!("unknown domain {name:?}"))),
    }
    .map_err(err)
}

/// A scenario file loaded into memory.
#[pyclass]
struct Scenario {
    inner: CoreScenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreScenario::load(Path::new(path)).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, base_dir = "."))]
    fn from_toml(text: &str, base_dir: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreScenario::from_toml(text, Path::new(base_dir)).map_err(err)? })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn grid(&self) -> (usize, usize) {
        (self.inner.grid.nx, self.inner.grid.ny)
    }

    /// Override one numeric parameter, same names as `--sweep`.
    fn set(&mut self, name: &str, value: f64) -> PyResult<()> {
        self.inner.set(name, value).map_err(err)
    }

    /// Returns `(report_json, fields)`. `fields` maps column names to nodal
    /// values and includes `x1`, `x2`; it is `None` for geometry checks.
    #[pyo3(signature = (mode = "solve"))]
    fn run(&self, py: Python<'_>, mode: &str) -> PyResult<(String, Option<Vec<(String, Vec<f64>)>>)> {
        let mode = parse_mode(mode)?;
        let (report, f) = py.detach(|| harness::run_scenario(&self.inner, mode)).map_err(err)?;
        let cols = f.map(|f| {
            let mut out = vec![
                ("x1".to_string(), f.grid.x.iter().map(|x| x[0]).collect()),
                ("x2".to_string(), f.grid.x.iter().map(|x| x[1]).collect()),
            ];
            out.extend(f.names.iter().map(|n| n.to_string()).zip(f.cols));
            out
        });
        Ok((json(&report)?, cols))
    }
}

/// Mapped grid on a builtin domain.
#[pyclass]
struct Grid {
    inner: CoreGrid,
}

#[pymethods]
impl Grid {
    #[new]
    #[pyo3(signature = (domain, nx, ny, shape = 1.0, height = 1.0))]
    fn new(domain: &str, nx: usize, ny: usize, shape: f64, height: f64) -> PyResult<Self> {
        let d = builtin(domain, shape, height)?;
        Ok(Self { inner: CoreGrid::new(&d, nx, ny).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn nodes(&self) -> Vec<(f64, f64)> {
        self.inner.x.iter().map(|x| (x[0], x[1])).collect()
    }

    fn weights(&self) -> Vec<f64> {
        self.inner.weights.clone()
    }

    fn lq_norm(&self, values: Vec<f64>, q: f64) -> PyResult<f64> {
        self.check(&values)?;
        fields::lq_norm(&self.inner, &values, q).map_err(err)
    }

    #[pyo3(signature = (values, s, p, epsilon = 0.0))]
    fn seminorm(&self, py: Python<'_>, values: Vec<f64>, s: f64, p: f64, epsilon: f64) -> PyResult<f64> {
        self.check(&values)?;
        let np = NormParams::new(s, p, epsilon).map_err(err)?;
        Ok(py.detach(|| fields::seminorm(&self.inner, &values, &np)))
    }

    #[pyo3(signature = (values, s, p, epsilon = 0.0))]
    fn wsp_norm(&self, py: Python<'_>, values: Vec<f64>, s: f64, p: f64, epsilon: f64) -> PyResult<f64> {
        self.check(&values)?;
        let np = NormParams::new(s, p, epsilon).map_err(err)?;
        py.detach(|| fields::wsp_norm(&self.inner, &values, &np)).map_err(err)
    }
}

impl Grid {
    fn check(&self, values: &[f64]) -> PyResult<()> {
        if values.len() != self.inner.len() {
            return Err(PyValueError::new_err(format!("expected {} values, got {}", self.inner.len(), values.len())));
        }
        Ok(())
    }
}

/// Flatness exponents at each singularity point and the resulting delta.
#[pyfunction]
#[pyo3(signature = (domain, shape = 1.0, height = 1.0))]
fn certificates(domain: &str, shape: f64, height: f64) -> PyResult<(Vec<u32>, Option<f64>)> {
    let d = builtin(domain, shape, height)?;
    let (c, delta) = domain_certificates(&d).map_err(err)?;
    Ok((c.iter().map(|c| c.exponent).collect(), delta))
}

/// Manufactured-solution study on the unit square, rows as JSON.
#[pyfunction]
#[pyo3(signature = (case, grids, mu = 1.0, nu = 1.0, gamma = 1.0, kappa = 1.0))]
fn mms_study(py: Python<'_>, case: &str, grids: Vec<usize>, mu: f64, nu: f64, gamma: f64, kappa: f64) -> PyResult<String> {
    let params = FluidParams { mu, nu, gamma, kappa };
    let rows = py.detach(|| harness::mms_study(case, &grids, &params)).map_err(err)?;
    json(&rows)
}

#[pymodule]
fn inflow_ns_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Grid>()?;
    m.add_function(wrap_pyfunction!(certificates, m)?)?;
    m.add_function(wrap_pyfunction!(mms_study, m)?)?;
    Ok(())
}
