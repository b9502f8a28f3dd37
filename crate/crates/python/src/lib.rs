//! Python bindings: encoding, training, prediction and feature strength functions.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sefron::fsf::default_candidates;
use sefron::neuron::fire_times;
use sefron::persist;
use sefron::{EncodingConfig, LabelColumn, LearningConfig, SefronError};

fn py_err(e: SefronError) -> PyErr {
    match e {
        SefronError::Io { .. } => PyIOError::new_err(e.to_string()),
        SefronError::Numeric(_) | SefronError::Json(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn enc(q: usize, gamma: f64, t_interval: f64) -> PyResult<EncodingConfig> {
    sefron::make_config(q, gamma, t_interval).map_err(py_err)
}

fn evaluation(py: Python<'_>, e: sefron::Evaluation) -> PyResult<Bound<'_, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("accuracy", e.accuracy)?;
    d.set_item("correct", e.correct)?;
    d.set_item("total", e.total)?;
    d.set_item("confusion", e.confusion)?;
    Ok(d)
}

/// Spike times of every receptive field, feature-major.
#[pyfunction]
#[pyo3(signature = (x, q = 6, gamma = 0.7, t_interval = 3.0))]
fn encode(x: Vec<f64>, q: usize, gamma: f64, t_interval: f64) -> PyResult<Vec<f64>> {
    let p = sefron::encode(&x, &enc(q, gamma, t_interval)?).map_err(py_err)?;
    Ok(p.times().to_vec())
}

/// Recovers a normalized feature value from its `q` spike times.
#[pyfunction]
#[pyo3(signature = (spikes, q = 6, gamma = 0.7, t_interval = 3.0))]
fn inverse_encode(spikes: Vec<f64>, q: usize, gamma: f64, t_interval: f64) -> PyResult<f64> {
    sefron::inverse_encode(&spikes, &enc(q, gamma, t_interval)?).map_err(py_err)
}

#[pyclass(name = "Dataset", module = "pysefron")]
struct PyDataset {
    inner: sefron::Dataset,
}

#[pymethods]
impl PyDataset {
    /// Features must already lie in [0, 1].
    #[new]
    #[pyo3(signature = (features, labels, n_classes = None))]
    fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: Option<usize>) -> PyResult<Self> {
        let n = n_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        let inner = sefron::Dataset::new(features, labels, n).map_err(py_err)?;
        Ok(PyDataset { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names().to_vec()
    }

    fn features(&self, k: usize) -> PyResult<Vec<f64>> {
        if k >= self.inner.len() {
            return Err(PyValueError::new_err(format!("row {k} out of range")));
        }
        Ok(self.inner.features(k).to_vec())
    }

    fn subset(&self, indices: Vec<usize>) -> PyResult<Self> {
        if let Some(k) = indices.iter().find(|&&k| k >= self.inner.len()) {
            return Err(PyValueError::new_err(format!("row {k} out of range")));
        }
        Ok(PyDataset {
            inner: self.inner.subset(&indices),
        })
    }
}

/// Loads a CSV file and min-max normalizes its feature columns.
/// The label column defaults to the last one.
#[pyfunction]
#[pyo3(signature = (path, label_column = None))]
fn load_csv(path: PathBuf, label_column: Option<&str>) -> PyResult<PyDataset> {
    let label = label_column.map_or(LabelColumn::Last, LabelColumn::from);
    let inner = sefron::load_csv(&path, &label).map_err(py_err)?;
    Ok(PyDataset { inner })
}

#[pyfunction]
fn load_idx(images: PathBuf, labels: PathBuf) -> PyResult<PyDataset> {
    let inner = sefron::load_idx(&images, &labels).map_err(py_err)?;
    Ok(PyDataset { inner })
}

#[pyclass(name = "Model", module = "pysefron")]
struct PyModel {
    inner: sefron::Model,
    best_epoch: usize,
    trace: Vec<f64>,
}

#[pymethods]
impl PyModel {
    /// Trains a classifier and returns the epoch with the best training accuracy.
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (
        dataset, *, q = 6, gamma = 0.7, t_interval = 3.0, lam = None, sigma = None,
        tau_stdp = None, epochs = None, seed = None, tau_eps = None, strict_eq10 = None
    ))]
    fn train(
        py: Python<'_>,
        dataset: &PyDataset,
        q: usize,
        gamma: f64,
        t_interval: f64,
        lam: Option<f64>,
        sigma: Option<f64>,
        tau_stdp: Option<f64>,
        epochs: Option<usize>,
        seed: Option<u64>,
        tau_eps: Option<f64>,
        strict_eq10: Option<bool>,
    ) -> PyResult<Self> {
        let d = LearningConfig::default();
        let cfg = LearningConfig {
            lambda: lam.unwrap_or(d.lambda),
            sigma: sigma.unwrap_or(d.sigma),
            tau_stdp: tau_stdp.unwrap_or(d.tau_stdp),
            epochs: epochs.unwrap_or(d.epochs),
            seed: seed.unwrap_or(d.seed),
            tau_eps: tau_eps.unwrap_or(d.tau_eps),
            strict_eq10: strict_eq10.unwrap_or(d.strict_eq10),
            ..d
        };
        let enc = enc(q, gamma, t_interval)?;
        let data = &dataset.inner;
        let out = py
            .detach(|| sefron::train(data, &cfg, &enc))
            .map_err(py_err)?;
        Ok(PyModel {
            best_epoch: out.best_epoch,
            trace: out.trace.iter().map(|r| r.train_accuracy).collect(),
            inner: out.model,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = persist::load_model(&path).map_err(py_err)?;
        Ok(PyModel {
            inner,
            best_epoch: 0,
            trace: Vec::new(),
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        persist::save_model(&self.inner, &path).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        let bytes = persist::model_to_json(&self.inner).map_err(py_err)?;
        String::from_utf8(bytes).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// SHA-256 of the serialized model.
    fn hash(&self) -> PyResult<String> {
        persist::model_hash(&self.inner).map_err(py_err)
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn thetas(&self) -> Vec<f64> {
        self.inner.thetas().to_vec()
    }

    /// 1-based; 0 for a loaded model.
    #[getter]
    fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    /// Training accuracy after every epoch.
    #[getter]
    fn trace(&self) -> Vec<f64> {
        self.trace.clone()
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<usize> {
        self.inner.predict(&x).map_err(py_err)
    }

    /// First firing time of every output neuron; the grid end means no spike.
    fn fire_times(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let p = self.inner.encode(&x).map_err(py_err)?;
        Ok(fire_times(&p, &self.inner))
    }

    fn evaluate<'py>(&self, py: Python<'py>, dataset: &PyDataset) -> PyResult<Bound<'py, PyDict>> {
        let e = sefron::evaluate(&self.inner, &dataset.inner).map_err(py_err)?;
        evaluation(py, e)
    }
}

#[pyclass(name = "FsfSet", module = "pysefron")]
struct PyFsfSet {
    inner: sefron::FsfSet,
}

#[pymethods]
impl PyFsfSet {
    #[staticmethod]
    fn extract(model: &PyModel, t_o: f64) -> PyResult<Self> {
        let inner = sefron::extract_fsf(&model.inner, t_o).map_err(py_err)?;
        Ok(PyFsfSet { inner })
    }

    /// Extracts at the read-out time that classifies `dataset` best.
    #[staticmethod]
    #[pyo3(signature = (model, dataset, step = 0.05))]
    fn select(py: Python<'_>, model: &PyModel, dataset: &PyDataset, step: f64) -> PyResult<Self> {
        if !(step > 0.0) {
            return Err(PyValueError::new_err("step must be positive"));
        }
        let (m, d) = (&model.inner, &dataset.inner);
        let inner = py
            .detach(|| {
                let candidates = default_candidates(m.grid().t_end(), step);
                let chosen = sefron::select_t_o(m, d, &candidates)?;
                sefron::extract_fsf(m, chosen.t_o)
            })
            .map_err(py_err)?;
        Ok(PyFsfSet { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = persist::load_fsf(&path).map_err(py_err)?;
        Ok(PyFsfSet { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        persist::save_fsf(&self.inner, &path).map_err(py_err)
    }

    #[getter]
    fn t_o(&self) -> f64 {
        self.inner.t_o()
    }

    #[getter]
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    /// Strength of feature `i` for class `j` at normalized value `x`.
    fn sample(&self, i: usize, j: usize, x: f64) -> PyResult<f64> {
        if i >= self.inner.n_features() || j >= self.inner.n_classes() {
            return Err(PyValueError::new_err(format!("feature {i} / class {j} out of range")));
        }
        sefron::sample_fsf(&self.inner, i, j, x).map_err(py_err)
    }

    /// Returns `{"per_feature": [[...]], "aggregates": [...], "predicted": j}`.
    fn classify<'py>(&self, py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let e = sefron::classify_fsf(&x, &self.inner).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("per_feature", e.per_feature)?;
        d.set_item("aggregates", e.aggregates)?;
        d.set_item("predicted", e.predicted)?;
        Ok(d)
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<usize> {
        self.inner.predict(&x).map_err(py_err)
    }

    fn evaluate<'py>(&self, py: Python<'py>, dataset: &PyDataset) -> PyResult<Bound<'py, PyDict>> {
        let e = sefron::evaluate(&self.inner, &dataset.inner).map_err(py_err)?;
        evaluation(py, e)
    }
}

/// Adds every binding to `m`; shared by the extension module and the tests.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_encode, m)?)?;
    m.add_function(wrap_pyfunction!(load_csv, m)?)?;
    m.add_function(wrap_pyfunction!(load_idx, m)?)?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyFsfSet>()?;
    Ok(())
}

#[pymodule]
fn pysefron(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
