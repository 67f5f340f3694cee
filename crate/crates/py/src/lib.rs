//! Python bindings. Records cross the boundary as plain dicts with the
//! same fields as the JSONL dataset format.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use relevkit::augment::{self, AugmentConfig, AugmentOp, MockProvider};
use relevkit::corpus::{self, LabeledPair, RelevanceLabel};
use relevkit::metrics::{self, GsbCounts, ScoredPrediction};
use relevkit::scorer::{self, Scorer, SyntheticSpec};
use relevkit::{summarizer, textseg};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, v: &impl serde::Serialize) -> PyResult<PyObject> {
    let text = serde_json::to_string(v).map_err(value_err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn pair_from_py(py: Python<'_>, obj: &Bound<'_, PyAny>, line: usize) -> PyResult<LabeledPair> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    corpus::parse_record(&text, line).map_err(value_err)
}

#[pyclass(name = "SummaryBudget", module = "relevkit")]
#[derive(Clone)]
struct PyBudget {
    inner: summarizer::SummaryBudget,
}

#[pymethods]
impl PyBudget {
    #[new]
    #[pyo3(signature = (query_focused_max=128, doc_summary_max=64, total_max=None, separator="[SEP]"))]
    fn new(query_focused_max: usize, doc_summary_max: usize, total_max: Option<usize>, separator: &str) -> PyResult<Self> {
        let inner = summarizer::SummaryBudget {
            query_focused_max,
            doc_summary_max,
            total_max: total_max.unwrap_or(query_focused_max + doc_summary_max),
            separator: separator.to_string(),
        };
        inner.validate().map_err(value_err)?;
        Ok(PyBudget { inner })
    }

    #[getter]
    fn query_focused_max(&self) -> usize {
        self.inner.query_focused_max
    }

    #[getter]
    fn doc_summary_max(&self) -> usize {
        self.inner.doc_summary_max
    }

    #[getter]
    fn total_max(&self) -> usize {
        self.inner.total_max
    }

    #[getter]
    fn separator(&self) -> &str {
        &self.inner.separator
    }

    fn __repr__(&self) -> String {
        format!(
            "SummaryBudget(query_focused_max={}, doc_summary_max={}, total_max={}, separator={:?})",
            self.inner.query_focused_max, self.inner.doc_summary_max, self.inner.total_max, self.inner.separator
        )
    }
}

#[pyclass(name = "MixSummary", module = "relevkit", frozen, get_all)]
struct PyMixSummary {
    query_focused: String,
    doc_summary: String,
    combined: String,
    selected_sentence_indices: Vec<usize>,
}

#[pymethods]
impl PyMixSummary {
    fn __str__(&self) -> &str {
        &self.combined
    }
}

fn budget_or_default(b: Option<PyRef<'_, PyBudget>>) -> summarizer::SummaryBudget {
    b.map(|b| b.inner.clone()).unwrap_or_default()
}

/// Normalized tokens of `text`.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    textseg::tokenize(text).into_iter().map(|t| t.normalized).collect()
}

#[pyfunction]
fn token_count(text: &str) -> usize {
    textseg::token_count(text)
}

/// Paragraphs as lists of sentence strings.
#[pyfunction]
fn segment(text: &str) -> PyResult<Vec<Vec<String>>> {
    let doc = textseg::segment(text).map_err(value_err)?;
    Ok(doc
        .paragraphs
        .iter()
        .map(|p| p.iter().map(|&i| doc.sentences[i].text.clone()).collect())
        .collect())
}

#[pyfunction]
#[pyo3(signature = (query, document, budget=None))]
fn mix_summary(query: &str, document: &str, budget: Option<PyRef<'_, PyBudget>>) -> PyResult<PyMixSummary> {
    let m = summarizer::mix_summary(query, document, &budget_or_default(budget)).map_err(value_err)?;
    Ok(PyMixSummary {
        query_focused: m.query_focused,
        doc_summary: m.doc_summary,
        combined: m.combined,
        selected_sentence_indices: m.selected_sentence_indices,
    })
}

/// `(label, score)` from the heuristic scorer over the mix summary.
#[pyfunction]
#[pyo3(signature = (query, document, budget=None))]
fn score(query: &str, document: &str, budget: Option<PyRef<'_, PyBudget>>) -> PyResult<(String, f64)> {
    let m = summarizer::mix_summary(query, document, &budget_or_default(budget)).map_err(value_err)?;
    let (label, s) = Scorer::default().score(query, &m);
    Ok((label.as_str().to_string(), s))
}

/// `(label, score)` using only the query-focused part.
#[pyfunction]
#[pyo3(signature = (query, document, budget=None))]
fn score_query_focused_only(
    query: &str,
    document: &str,
    budget: Option<PyRef<'_, PyBudget>>,
) -> PyResult<(String, f64)> {
    let m = summarizer::mix_summary(query, document, &budget_or_default(budget)).map_err(value_err)?;
    let (label, s) = Scorer::default().score_query_focused_only(query, &m.query_focused);
    Ok((label.as_str().to_string(), s))
}

#[pyfunction]
fn multiclass_auc(labels: Vec<String>, scores: Vec<f64>) -> PyResult<f64> {
    if labels.len() != scores.len() {
        return Err(PyValueError::new_err("labels and scores differ in length"));
    }
    let preds = labels
        .iter()
        .zip(scores)
        .map(|(l, s)| Ok(ScoredPrediction::new(l.parse::<RelevanceLabel>().map_err(value_err)?, s)))
        .collect::<PyResult<Vec<_>>>()?;
    metrics::multiclass_auc(&preds).map_err(value_err)
}

#[pyfunction]
fn delta_gsb(good: u64, same: u64, bad: u64) -> PyResult<f64> {
    metrics::delta_gsb(GsbCounts::new(good, same, bad)).map_err(value_err)
}

/// Records of a JSONL dataset as dicts.
#[pyfunction]
fn load_dataset(py: Python<'_>, path: &str) -> PyResult<Vec<PyObject>> {
    let data = corpus::load_dataset(path).map_err(value_err)?;
    data.iter().map(|p| to_py(py, &p.to_json())).collect()
}

/// Label counts of a list of record dicts.
#[pyfunction]
fn stats(py: Python<'_>, records: Vec<Bound<'_, PyAny>>) -> PyResult<PyObject> {
    let pairs = records
        .iter()
        .enumerate()
        .map(|(i, r)| pair_from_py(py, r, i + 1))
        .collect::<PyResult<Vec<_>>>()?;
    to_py(py, &corpus::stats(&pairs))
}

/// Augments record dicts with the deterministic mock provider.
#[pyfunction]
#[pyo3(signature = (records, seed=0, ops=None))]
fn augment_mock(
    py: Python<'_>,
    records: Vec<Bound<'_, PyAny>>,
    seed: u64,
    ops: Option<Vec<String>>,
) -> PyResult<Vec<PyObject>> {
    let pairs = records
        .iter()
        .enumerate()
        .map(|(i, r)| pair_from_py(py, r, i + 1))
        .collect::<PyResult<Vec<_>>>()?;
    let mut config = AugmentConfig {
        seed,
        ..AugmentConfig::default()
    };
    if let Some(ops) = ops {
        config.ops = ops
            .iter()
            .map(|o| o.parse::<AugmentOp>().map_err(PyValueError::new_err))
            .collect::<PyResult<_>>()?;
    }
    let provider = MockProvider::new(seed);
    let report = py
        .allow_threads(|| augment::augment_dataset(&pairs, &provider, &config))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    report.samples.iter().map(|s| to_py(py, &s.to_record().to_json())).collect()
}

/// Synthetic mix vs query-focused-only comparison; returns the report dict.
#[pyfunction]
#[pyo3(signature = (n_docs=300, seed=7, budget=None))]
fn run_experiment(py: Python<'_>, n_docs: usize, seed: u64, budget: Option<PyRef<'_, PyBudget>>) -> PyResult<PyObject> {
    let spec = SyntheticSpec {
        n_docs,
        seed,
        ..SyntheticSpec::default()
    };
    let budget = budget_or_default(budget);
    let report = py
        .allow_threads(|| scorer::run_experiment(&spec, &budget))
        .map_err(value_err)?;
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "relevkit")]
fn relevkit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBudget>()?;
    m.add_class::<PyMixSummary>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(token_count, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(mix_summary, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(score_query_focused_only, m)?)?;
    m.add_function(wrap_pyfunction!(multiclass_auc, m)?)?;
    m.add_function(wrap_pyfunction!(delta_gsb, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(stats, m)?)?;
    m.add_function(wrap_pyfunction!(augment_mock, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
