//! Python bindings. Points are passed as sequences of `+1`/`-1` integers and
//! parity masks as integers whose bit `j` marks coordinate `j`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use kspectra::domain::{Label, ParityMask, Point, SampleSet, SparseClassifier};
use kspectra::svm::TrainConfig;

fn py_err(e: kspectra::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_point(coords: &[i8]) -> PyResult<Point> {
    Point::from_signs(coords).map_err(py_err)
}

fn to_sample(points: Vec<Vec<i8>>, labels: Vec<Label>) -> PyResult<SampleSet> {
    let points = points
        .iter()
        .map(|p| to_point(p))
        .collect::<PyResult<Vec<_>>>()?;
    SampleSet::new(points, labels).map_err(py_err)
}

fn to_masks(bits: &[u64], n: usize) -> PyResult<Vec<ParityMask>> {
    bits.iter()
        .map(|&b| ParityMask::new(b, n).map_err(py_err))
        .collect()
}

fn sample_to_py(sample: &SampleSet) -> (Vec<Vec<i8>>, Vec<Label>) {
    (
        sample.points().iter().map(Point::coords).collect(),
        sample.labels().to_vec(),
    )
}

/// `sign(Σ_i a_i χ_{S_i}(x))` over `{±1}^n`.
#[pyclass(
    name = "SparseClassifier",
    module = "kspectra",
    frozen,
    skip_from_py_object
)]
#[derive(Clone)]
struct PySparseClassifier {
    inner: SparseClassifier,
}

#[pymethods]
impl PySparseClassifier {
    #[new]
    fn new(n: usize, terms: Vec<(u64, f64)>) -> PyResult<Self> {
        let terms = terms
            .into_iter()
            .map(|(b, a)| Ok((ParityMask::new(b, n).map_err(py_err)?, a)))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: SparseClassifier::new(n, terms).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: text.parse().map_err(py_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn terms(&self) -> Vec<(u64, f64)> {
        self.inner
            .terms()
            .iter()
            .map(|(m, a)| (m.bits(), *a))
            .collect()
    }

    fn score(&self, x: Vec<i8>) -> PyResult<f64> {
        self.inner.score(&to_point(&x)?).map_err(py_err)
    }

    fn evaluate(&self, x: Vec<i8>) -> PyResult<i8> {
        self.inner.evaluate(&to_point(&x)?).map_err(py_err)
    }

    fn predict(&self, points: Vec<Vec<i8>>) -> PyResult<Vec<i8>> {
        points
            .iter()
            .map(|p| self.inner.evaluate(&to_point(p)?).map_err(py_err))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.sparsity()
    }

    fn __repr__(&self) -> String {
        format!(
            "SparseClassifier(n={}, k={})",
            self.inner.dim(),
            self.inner.sparsity()
        )
    }
}

/// Result of hinge-loss training.
#[pyclass(name = "TrainResult", module = "kspectra", frozen, get_all)]
struct PyTrainResult {
    weights: Vec<f64>,
    objective: f64,
    epochs_used: usize,
    converged: bool,
}

#[pyfunction]
fn fwht(values: Vec<f64>) -> PyResult<Vec<f64>> {
    let v = kspectra::DenseSpectrum::new(values).map_err(py_err)?;
    Ok(kspectra::fwht(&v).into_values())
}

#[pyfunction]
fn parity_eval(mask: u64, x: Vec<i8>) -> PyResult<i8> {
    let x = to_point(&x)?;
    let mask = ParityMask::new(mask, x.dim()).map_err(py_err)?;
    kspectra::parity_eval(&mask, &x).map_err(py_err)
}

#[pyfunction]
fn enumerate_low_degree(n: usize, d: usize) -> PyResult<Vec<u64>> {
    Ok(kspectra::enumerate_low_degree(n, d)
        .map_err(py_err)?
        .iter()
        .map(ParityMask::bits)
        .collect())
}

#[pyfunction]
fn correlate(points: Vec<Vec<i8>>, labels: Vec<i8>, masks: Vec<u64>) -> PyResult<Vec<i64>> {
    let sample = to_sample(points, labels)?;
    let masks = to_masks(&masks, sample.dim())?;
    kspectra::correlate(&sample, &masks).map_err(py_err)
}

/// Masks chosen by correlation screening, best first.
#[pyfunction]
fn select_features(
    points: Vec<Vec<i8>>,
    labels: Vec<i8>,
    d: usize,
    k: usize,
) -> PyResult<Vec<u64>> {
    let sample = to_sample(points, labels)?;
    let selected = kspectra::select_features(&sample, d, k).map_err(py_err)?;
    Ok(selected.masks().iter().map(ParityMask::bits).collect())
}

/// Hinge sum for a row-major list of rows.
#[pyfunction]
fn hinge_objective(z: Vec<f64>, rows: Vec<Vec<i8>>, labels: Vec<i8>) -> PyResult<f64> {
    let flat: Vec<i8> = rows.concat();
    kspectra::hinge_objective(&z, &flat, &labels).map_err(py_err)
}

#[pyfunction]
fn project_l1(v: Vec<f64>, tau: f64) -> Vec<f64> {
    kspectra::project_l1(&v, tau)
}

#[pyfunction]
#[pyo3(signature = (rows, labels, tau=1000.0, max_epochs=2000, tolerance=1e-6, step_scale=1.0))]
fn train(
    rows: Vec<Vec<i8>>,
    labels: Vec<i8>,
    tau: f64,
    max_epochs: usize,
    tolerance: f64,
    step_scale: f64,
) -> PyResult<PyTrainResult> {
    let k = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != k) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    let config = TrainConfig {
        tau,
        max_epochs,
        tolerance,
        step_scale,
        seed: 0,
    };
    let res = kspectra::svm::train_matrix(&rows.concat(), &labels, k, &config).map_err(py_err)?;
    Ok(PyTrainResult {
        weights: res.weights,
        objective: res.objective,
        epochs_used: res.epochs_used,
        converged: res.converged,
    })
}

/// Screening followed by hinge training; returns the learned classifier.
#[pyfunction]
#[pyo3(signature = (points, labels, d=3, k=150, tau=1000.0))]
fn fit(
    points: Vec<Vec<i8>>,
    labels: Vec<i8>,
    d: usize,
    k: usize,
    tau: f64,
) -> PyResult<PySparseClassifier> {
    let sample = to_sample(points, labels)?;
    let config = TrainConfig {
        tau,
        ..TrainConfig::default()
    };
    let eval = kspectra::fit_and_score(&sample, &sample, d, k, &config).map_err(py_err)?;
    Ok(PySparseClassifier {
        inner: eval.classifier,
    })
}

#[pyfunction]
fn empirical_risk(predicted: Vec<i8>, actual: Vec<i8>) -> PyResult<f64> {
    kspectra::empirical_risk(&predicted, &actual).map_err(py_err)
}

#[pyfunction]
fn vc_bound_term(h: f64, ell: usize, eta: f64) -> PyResult<f64> {
    let params = kspectra::theory::BoundParams::new(h, ell, eta).map_err(py_err)?;
    kspectra::theory::vc_bound_term(&params).map_err(py_err)
}

#[pyfunction]
fn verify_shattering_construction(n: u32) -> PyResult<bool> {
    kspectra::theory::verify_shattering_construction(n).map_err(py_err)
}

#[pyfunction]
fn sample_class_size(n: u32, k: usize, trials: usize, seed: u64) -> PyResult<usize> {
    kspectra::theory::sample_class_size(n, k, trials, seed).map_err(py_err)
}

/// Returns `(points, labels, truth)` for a random planted model.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn generate_planted(
    n: usize,
    k: usize,
    d: usize,
    ell: usize,
    seed: u64,
) -> PyResult<(Vec<Vec<i8>>, Vec<i8>, PySparseClassifier)> {
    let (sample, truth) = kspectra::generate_planted(n, k, d, ell, seed).map_err(py_err)?;
    let (points, labels) = sample_to_py(&sample);
    Ok((points, labels, PySparseClassifier { inner: truth }))
}

/// Parses IDX image/label files and returns the ±1 zero/one dataset as
/// `(ids, points, labels)`.
#[pyfunction]
#[pyo3(signature = (images, labels, threshold=kspectra::mnist::DEFAULT_THRESHOLD))]
#[allow(clippy::type_complexity)]
fn load_mnist01(
    images: std::path::PathBuf,
    labels: std::path::PathBuf,
    threshold: f64,
) -> PyResult<(Vec<u32>, Vec<Vec<i8>>, Vec<i8>)> {
    let raw = kspectra::mnist::load_idx(&images, &labels).map_err(py_err)?;
    let items = kspectra::mnist::preprocess(&raw, threshold).map_err(py_err)?;
    Ok((
        items.iter().map(|it| it.id).collect(),
        items.iter().map(|it| it.point.coords()).collect(),
        items.iter().map(|it| it.label).collect(),
    ))
}

#[pymodule]
#[pyo3(name = "kspectra")]
pub fn kspectra_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySparseClassifier>()?;
    m.add_class::<PyTrainResult>()?;
    m.add_function(wrap_pyfunction!(fwht, m)?)?;
    m.add_function(wrap_pyfunction!(parity_eval, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_low_degree, m)?)?;
    m.add_function(wrap_pyfunction!(correlate, m)?)?;
    m.add_function(wrap_pyfunction!(select_features, m)?)?;
    m.add_function(wrap_pyfunction!(hinge_objective, m)?)?;
    m.add_function(wrap_pyfunction!(project_l1, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_risk, m)?)?;
    m.add_function(wrap_pyfunction!(vc_bound_term, m)?)?;
    m.add_function(wrap_pyfunction!(verify_shattering_construction, m)?)?;
    m.add_function(wrap_pyfunction!(sample_class_size, m)?)?;
    m.add_function(wrap_pyfunction!(generate_planted, m)?)?;
    m.add_function(wrap_pyfunction!(load_mnist01, m)?)?;
    Ok(())
}
