//! Python bindings: the two-branch fractional model, PSO calibration, local
//! and global sensitivity indices.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fracvisc_core as fv;
use fv::calibration::{fit_with, FitOptions, ParamBounds};
use fv::dataio::{model_from_json, model_to_json, synthesize_curve, MasterCurve};
use fv::gsa::{model_sobol_indices, SaltelliConfig};
use fv::lsa::{self, LogMeasure, McConfig, NormKind, Output, ParamRanges, SensitivityCurve, Tau2Mode};
use fv::pso::PsoConfig;
use fv::viscomodel::{BranchParams, Denominator, FractionalModel, ModelKind};

fn err(e: fv::Error) -> PyErr {
    match e {
        fv::Error::Io(m) => PyIOError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn bad(what: &str, got: &str, allowed: &str) -> PyErr {
    PyValueError::new_err(format!("unknown {what} `{got}`; expected one of {allowed}"))
}

fn parse_denominator(s: &str) -> PyResult<Denominator> {
    match s {
        "exact" => Ok(Denominator::Exact),
        "unit_cross" => Ok(Denominator::UnitCross),
        _ => Err(bad("denominator", s, "exact, unit_cross")),
    }
}

fn parse_kind(s: &str) -> PyResult<ModelKind> {
    match s {
        "FMM-FMG" => Ok(ModelKind::FmmFmg),
        "FMG-FMG" => Ok(ModelKind::FmgFmg),
        _ => Err(bad("model kind", s, "FMM-FMG, FMG-FMG")),
    }
}

fn parse_output(s: &str) -> PyResult<Output> {
    Output::from_name(s).ok_or_else(|| bad("output", s, "storage, loss, complex"))
}

fn parse_tau2(s: &str) -> PyResult<Tau2Mode> {
    match s {
        "independent" => Ok(Tau2Mode::Independent),
        "constrained" => Ok(Tau2Mode::Constrained),
        _ => Err(bad("tau2 mode", s, "independent, constrained")),
    }
}

/// Two-branch fractional viscoelastic model (moduli in MPa, times in s).
#[pyclass(name = "Model", module = "fracvisc", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: FractionalModel,
}

#[pymethods]
impl PyModel {
    /// Fractional Maxwell branch plus fractional gel branch.
    #[staticmethod]
    #[pyo3(signature = (e_c1, tau_c1, alpha1, beta1, e_c2, tau_c2, alpha2, denominator = "exact"))]
    #[allow(clippy::too_many_arguments)]
    fn fmm_fmg(
        e_c1: f64,
        tau_c1: f64,
        alpha1: f64,
        beta1: f64,
        e_c2: f64,
        tau_c2: f64,
        alpha2: f64,
        denominator: &str,
    ) -> PyResult<Self> {
        let b1 = BranchParams::new(e_c1, tau_c1, alpha1, beta1).map_err(err)?;
        let b2 = BranchParams::gel(e_c2, tau_c2, alpha2).map_err(err)?;
        let m = FractionalModel::fmm_fmg(b1, b2).map_err(err)?;
        Ok(Self {
            inner: m.with_denominator(parse_denominator(denominator)?),
        })
    }

    /// Two fractional gel branches.
    #[staticmethod]
    #[pyo3(signature = (e_c1, tau_c1, alpha1, e_c2, tau_c2, alpha2, denominator = "exact"))]
    fn fmg_fmg(e_c1: f64, tau_c1: f64, alpha1: f64, e_c2: f64, tau_c2: f64, alpha2: f64, denominator: &str) -> PyResult<Self> {
        let b1 = BranchParams::gel(e_c1, tau_c1, alpha1).map_err(err)?;
        let b2 = BranchParams::gel(e_c2, tau_c2, alpha2).map_err(err)?;
        let m = FractionalModel::fmg_fmg(b1, b2).map_err(err)?;
        Ok(Self {
            inner: m.with_denominator(parse_denominator(denominator)?),
        })
    }

    /// A bundled fitted row such as `"40HS/0.0"`.
    #[staticmethod]
    #[pyo3(signature = (label, constrained = false))]
    fn preset(label: &str, constrained: bool) -> PyResult<Self> {
        let row = fv::presets::find(label).ok_or_else(|| PyValueError::new_err(format!("unknown preset `{label}`")))?;
        let inner = if constrained { row.constrained_model() } else { row.model() }.map_err(err)?;
        Ok(Self { inner })
    }

    /// Labels of the bundled fitted rows.
    #[staticmethod]
    fn presets() -> Vec<String> {
        fv::presets::FMM_FMG_FITS.iter().map(|r| r.label()).collect()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: model_from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        model_to_json(&self.inner)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn denominator(&self) -> &'static str {
        match self.inner.denominator {
            Denominator::Exact => "exact",
            Denominator::UnitCross => "unit_cross",
        }
    }

    /// Parameter values keyed by name.
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for &p in self.inner.kind.params() {
            d.set_item(p.name(), self.inner.get(p))?;
        }
        Ok(d)
    }

    fn with_denominator(&self, denominator: &str) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_denominator(parse_denominator(denominator)?),
        })
    }

    /// Copy with `tau_c2` recomputed from the time-scale constraint.
    fn with_constrained_tau2(&self) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_constrained_tau2().map_err(err)?,
        })
    }

    /// `(storage, loss)` at each shifted frequency in `x`.
    fn moduli(&self, x: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        if let Some(bad) = x.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(PyValueError::new_err(format!("frequencies must be positive and finite, got {bad}")));
        }
        let k = self.inner.kernel().map_err(err)?;
        Ok(x.iter().map(|&v| k.eval(v)).map(|m| (m.storage, m.loss)).unzip())
    }

    fn __repr__(&self) -> String {
        let ps: Vec<String> = self
            .inner
            .kind
            .params()
            .iter()
            .map(|&p| format!("{}={}", p.name(), self.inner.get(p)))
            .collect();
        format!("Model({}, {})", self.inner.kind, ps.join(", "))
    }
}

/// `n` frequencies evenly spaced in log10 over `[lo, hi]`.
#[pyfunction]
fn log_grid(lo: f64, hi: f64, n: usize) -> PyResult<Vec<f64>> {
    fv::grid::log_grid(lo, hi, n).map_err(err)
}

/// Noisy or exact `(storage, loss)` samples of `model` on `grid`.
#[pyfunction]
#[pyo3(signature = (model, grid, noise_sigma_log10 = 0.0, seed = 0))]
fn synthesize(model: PyRef<'_, PyModel>, grid: Vec<f64>, noise_sigma_log10: f64, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let c = synthesize_curve(&model.inner, &grid, noise_sigma_log10, seed, "synthetic").map_err(err)?;
    Ok((c.e_storage, c.e_loss))
}

/// PSO fit to a master curve. Returns a dict with the best model, per
/// parameter mean/std over runs, best cost, relative error and run costs.
#[pyfunction]
#[pyo3(signature = (x, storage, loss, kind = "FMM-FMG", n_pop = 200, n_iter = 6000, n_runs = 50, seed = 0,
                    constrain_tau2 = true, denominator = "exact"))]
#[allow(clippy::too_many_arguments)]
fn fit<'py>(
    py: Python<'py>,
    x: Vec<f64>,
    storage: Vec<f64>,
    loss: Vec<f64>,
    kind: &str,
    n_pop: usize,
    n_iter: usize,
    n_runs: usize,
    seed: u64,
    constrain_tau2: bool,
    denominator: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let kind = parse_kind(kind)?;
    let opts = FitOptions {
        denominator: parse_denominator(denominator)?,
        ..FitOptions::default()
    };
    let cfg = PsoConfig {
        n_pop,
        n_iter,
        n_runs,
        seed,
        ..PsoConfig::default()
    };
    let data = MasterCurve::new("data", x, storage, loss).map_err(err)?;
    let bounds = ParamBounds::standard(kind, constrain_tau2);
    let res = py
        .detach(|| fit_with(&data, kind, &bounds, &cfg, constrain_tau2, &opts))
        .map_err(err)?;

    let out = PyDict::new(py);
    out.set_item("best_model", PyModel { inner: res.best_model })?;
    let stats = PyDict::new(py);
    for s in &res.stats {
        stats.set_item(s.param.name(), (s.mean, s.std))?;
    }
    out.set_item("stats", stats)?;
    out.set_item("best_cost", res.best_cost)?;
    out.set_item("relative_error", res.relative_error)?;
    out.set_item("run_costs", res.run_costs)?;
    Ok(out)
}

fn curves_dict<'py>(py: Python<'py>, curves: &[SensitivityCurve]) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for c in curves {
        d.set_item(c.param.name(), c.values.clone())?;
    }
    Ok(d)
}

/// Normalized local indices `q/y dy/dq` of every parameter on `grid`.
#[pyfunction]
#[pyo3(signature = (model, grid, output = "storage"))]
fn local_indices<'py>(py: Python<'py>, model: PyRef<'_, PyModel>, grid: Vec<f64>, output: &str) -> PyResult<Bound<'py, PyDict>> {
    let curves = lsa::local_index_curves(&model.inner, &grid, parse_output(output)?).map_err(err)?;
    curves_dict(py, &curves)
}

/// Monte Carlo mean and std of the local indices over uniform ranges with
/// relative standard deviation `rel_std` about the model parameters.
#[pyfunction]
#[pyo3(signature = (model, grid, output = "storage", rel_std = 0.05, n_samples = 2000, seed = 0))]
fn mc_indices<'py>(
    py: Python<'py>,
    model: PyRef<'_, PyModel>,
    grid: Vec<f64>,
    output: &str,
    rel_std: f64,
    n_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let output = parse_output(output)?;
    let m = model.inner;
    let ranges = ParamRanges::from_model(&m, rel_std).map_err(err)?;
    let cfg = McConfig {
        n_samples,
        seed,
        ..McConfig::default()
    };
    let mc = py
        .detach(|| lsa::mc_average_indices(&m, &ranges, &grid, output, &cfg))
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("mean", curves_dict(py, &mc.mean)?)?;
    out.set_item("std", curves_dict(py, &mc.std)?)?;
    out.set_item("resampled", mc.resampled)?;
    Ok(out)
}

/// L1, L2 (over ln x, or log10 x with `measure="decimal"`) or Linf norm of a
/// sampled index curve.
#[pyfunction]
#[pyo3(signature = (grid, values, kind = "l1", measure = "natural"))]
fn index_norm(grid: Vec<f64>, values: Vec<f64>, kind: &str, measure: &str) -> PyResult<f64> {
    let kind = match kind {
        "l1" => NormKind::L1,
        "l2" => NormKind::L2,
        "linf" => NormKind::Linf,
        _ => return Err(bad("norm", kind, "l1, l2, linf")),
    };
    let measure = match measure {
        "natural" => LogMeasure::Natural,
        "decimal" => LogMeasure::Decimal,
        _ => return Err(bad("measure", measure, "natural, decimal")),
    };
    let curve = SensitivityCurve {
        output: Output::Storage,
        param: fv::Param::Ec1,
        grid,
        values,
    };
    lsa::index_norm(&curve, kind, measure).map_err(err)
}

/// First- and total-order Sobol' indices on `grid` (Saltelli sampling,
/// `n` base samples).
#[pyfunction]
#[pyo3(signature = (model, grid, output = "storage", rel_std = 0.05, n = 16384, scramble_seed = None, tau2 = "independent"))]
#[allow(clippy::too_many_arguments)]
fn sobol_indices<'py>(
    py: Python<'py>,
    model: PyRef<'_, PyModel>,
    grid: Vec<f64>,
    output: &str,
    rel_std: f64,
    n: usize,
    scramble_seed: Option<u64>,
    tau2: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let output = parse_output(output)?;
    let tau2 = parse_tau2(tau2)?;
    let ranges = ParamRanges::from_model(&model.inner, rel_std).map_err(err)?;
    let cfg = SaltelliConfig { n, scramble_seed };
    let s = py
        .detach(|| model_sobol_indices(&ranges, &grid, output, &cfg, tau2))
        .map_err(err)?;
    let (first, total) = (PyDict::new(py), PyDict::new(py));
    for (i, p) in s.params.iter().enumerate() {
        first.set_item(p.name(), s.result.first[i].clone())?;
        total.set_item(p.name(), s.result.total[i].clone())?;
    }
    let out = PyDict::new(py);
    out.set_item("first", first)?;
    out.set_item("total", total)?;
    out.set_item("variance", s.result.variance.clone())?;
    out.set_item("zero_variance", s.result.zero_variance.clone())?;
    Ok(out)
}

/// First `n` points of the `k`-dimensional Sobol' sequence.
#[pyfunction]
#[pyo3(signature = (n, k, scramble_seed = None))]
fn sobol_points(n: usize, k: usize, scramble_seed: Option<u64>) -> PyResult<Vec<Vec<f64>>> {
    fv::gsa::sobol_points(n, k, scramble_seed).map_err(err)
}

#[pymodule(name = "fracvisc")]
fn fracvisc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(log_grid, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(local_indices, m)?)?;
    m.add_function(wrap_pyfunction!(mc_indices, m)?)?;
    m.add_function(wrap_pyfunction!(index_norm, m)?)?;
    m.add_function(wrap_pyfunction!(sobol_indices, m)?)?;
    m.add_function(wrap_pyfunction!(sobol_points, m)?)?;
    Ok(())
}
