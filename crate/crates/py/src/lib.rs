//! Python bindings for the evolving-topic engine.
//!
//! Structured results (windows, reports, topics) come back as plain Python
//! dicts and lists decoded from the same JSON the command line writes.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use evotopic_core::corpus::{self, Document};
use evotopic_core::hdbscan::{self as hd, HdbscanParams};
use evotopic_core::metrics::{self, RefDocs};
use evotopic_core::pipeline::{self, PipelineConfig, RunBundle};
use evotopic_core::reduction;
use evotopic_core::synth::{self as sy, SynthSpec};
use evotopic_core::windowing::{self, WindowSpec, SECONDS_PER_DAY};
use evotopic_core::Error;
use nalgebra::DMatrix;

create_exception!(evotopic, ConfigError, PyValueError, "Invalid configuration or parameters.");
create_exception!(evotopic, DataError, PyException, "Malformed or inconsistent input data.");

fn err(e: Error) -> PyErr {
    if e.exit_code() == 2 {
        ConfigError::new_err(e.to_string())
    } else {
        DataError::new_err(e.to_string())
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| DataError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(ConfigError::new_err("rows must all have the same length"));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Documents sorted by `(timestamp, id)` with their tokens.
#[pyclass(module = "evotopic", frozen)]
struct Corpus {
    inner: corpus::Corpus,
}

#[pymethods]
impl Corpus {
    /// `documents` is a list of `(id, timestamp_seconds, text)` tuples.
    #[new]
    #[pyo3(signature = (documents, stopwords = None))]
    fn new(documents: Vec<(String, i64, String)>, stopwords: Option<Vec<String>>) -> PyResult<Self> {
        let stop = stopwords.map(|s| s.into_iter().collect());
        let docs = documents
            .into_iter()
            .map(|(id, timestamp, text)| Document {
                tokens: corpus::tokenize(&text, stop.as_ref()),
                id,
                timestamp,
                text,
            })
            .collect();
        Ok(Corpus {
            inner: corpus::Corpus::from_documents(docs).map_err(err)?,
        })
    }

    /// Reads a JSON-lines corpus file.
    #[staticmethod]
    #[pyo3(signature = (path, stopwords = None))]
    fn load(path: PathBuf, stopwords: Option<PathBuf>) -> PyResult<Self> {
        let stop = stopwords.as_deref().map(corpus::load_stopwords).transpose().map_err(err)?;
        Ok(Corpus {
            inner: corpus::load_corpus(&path, stop.as_ref()).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.documents().iter().map(|d| d.id.clone()).collect()
    }

    #[getter]
    fn timestamps(&self) -> Vec<i64> {
        self.inner.documents().iter().map(|d| d.timestamp).collect()
    }

    #[getter]
    fn tokens(&self) -> Vec<Vec<String>> {
        self.inner.documents().iter().map(|d| d.tokens.clone()).collect()
    }

    #[getter]
    fn vocabulary(&self) -> Vec<String> {
        self.inner.vocabulary().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Corpus({} documents)", self.inner.len())
    }
}

/// Row-major float32 document embeddings in corpus order.
#[pyclass(module = "evotopic", frozen)]
struct Embeddings {
    inner: corpus::EmbeddingMatrix,
}

#[pymethods]
impl Embeddings {
    #[new]
    fn new(rows: Vec<Vec<f32>>) -> PyResult<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(ConfigError::new_err("rows must all have the same length"));
        }
        let n = rows.len();
        Ok(Embeddings {
            inner: corpus::EmbeddingMatrix::new(n, dim, rows.concat()).map_err(err)?,
        })
    }

    /// Reads an EVT1 file plus its id sidecar and reorders rows to `corpus`.
    #[staticmethod]
    #[pyo3(signature = (path, corpus, ids = None))]
    fn load(path: PathBuf, corpus: &Corpus, ids: Option<PathBuf>) -> PyResult<Self> {
        let sidecar = ids.unwrap_or_else(|| corpus::sidecar_path(&path));
        Ok(Embeddings {
            inner: corpus::load_embeddings(&path, &sidecar, &corpus.inner).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_evt1(data: &[u8]) -> PyResult<Self> {
        Ok(Embeddings {
            inner: corpus::decode_embeddings(data).map_err(err)?,
        })
    }

    fn to_evt1<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &corpus::encode_embeddings(&self.inner))
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.dim())
    }

    fn row(&self, i: usize) -> PyResult<Vec<f32>> {
        if i >= self.inner.rows() {
            return Err(pyo3::exceptions::PyIndexError::new_err(i));
        }
        Ok(self.inner.row(i).to_vec())
    }

    fn tolist(&self) -> Vec<Vec<f32>> {
        (0..self.inner.rows()).map(|i| self.inner.row(i).to_vec()).collect()
    }
}

/// Pipeline settings addressed by the same dotted keys as config files.
#[pyclass(module = "evotopic")]
struct Config {
    inner: PipelineConfig,
}

#[pymethods]
impl Config {
    /// `overrides` maps dotted keys such as `"reduce.dim"` to string values.
    #[new]
    #[pyo3(signature = (path = None, overrides = None))]
    fn new(path: Option<PathBuf>, overrides: Option<BTreeMap<String, String>>) -> PyResult<Self> {
        let mut inner = match path {
            Some(p) => PipelineConfig::load(&p).map_err(err)?,
            None => PipelineConfig::default(),
        };
        for (k, v) in overrides.unwrap_or_default() {
            inner.set(&k, &v).map_err(err)?;
        }
        Ok(Config { inner })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Config {
            inner: PipelineConfig::parse(text).map_err(err)?,
        })
    }

    #[classattr]
    fn keys() -> Vec<&'static str> {
        PipelineConfig::KEYS.to_vec()
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(err)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    /// Analysis settings as strings, keyed like the config file.
    fn echo(&self) -> BTreeMap<String, String> {
        self.inner.echo()
    }
}

/// A finished, content-hashed run.
#[pyclass(module = "evotopic", frozen)]
struct Bundle {
    inner: RunBundle,
}

#[pymethods]
impl Bundle {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Bundle {
            inner: RunBundle::load(&path).map_err(err)?,
        })
    }

    #[getter]
    fn content_hash(&self) -> String {
        self.inner.content_hash.clone()
    }

    fn verify(&self) -> PyResult<bool> {
        self.inner.verify().map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        let bytes = self.inner.to_json().map_err(err)?;
        String::from_utf8(bytes).map_err(|e| DataError::new_err(e.to_string()))
    }

    #[getter]
    fn windows<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.payload.windows)
    }

    #[getter]
    fn local_clusters<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.payload.local_clusters)
    }

    /// Evolving topics with their per-window parts and top terms.
    #[getter]
    fn topics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &pipeline::topics_file(&self.inner).topics)
    }

    #[getter]
    fn period_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.payload.period_report.rows)
    }

    #[getter]
    fn topic_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.payload.topic_report.rows)
    }

    /// Writes bundle, topics, reports and plot data into `outdir`.
    fn export(&self, outdir: PathBuf) -> PyResult<()> {
        pipeline::export(&self.inner, &outdir).map_err(err)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner.payload;
        format!(
            "Bundle({} windows, {} topics, hash {})",
            p.windows.len(),
            p.topics.len(),
            &self.inner.content_hash[..12]
        )
    }
}

#[pyfunction]
#[pyo3(signature = (text, stopwords = None))]
fn tokenize(text: &str, stopwords: Option<Vec<String>>) -> Vec<String> {
    let stop = stopwords.map(|s| s.into_iter().collect());
    corpus::tokenize(text, stop.as_ref())
}

/// Window bounds and member indices; `origin` is seconds since the epoch.
#[pyfunction]
#[pyo3(signature = (corpus, length_days = 1095, overlap_days = 365, origin = None))]
fn segment<'py>(
    py: Python<'py>,
    corpus: &Corpus,
    length_days: i64,
    overlap_days: i64,
    origin: Option<i64>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = WindowSpec {
        origin,
        ..WindowSpec::from_days(length_days, overlap_days)
    };
    to_py(py, &windowing::segment(&corpus.inner, &spec).map_err(err)?)
}

/// Returns `(rotation, translation, residual)` with `reference ~ moving @ rotation + translation`.
#[pyfunction]
fn procrustes(reference: Vec<Vec<f64>>, moving: Vec<Vec<f64>>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    let (a, b) = (matrix(&reference)?, matrix(&moving)?);
    let t = reduction::procrustes(&a, &b).map_err(err)?;
    let residual = reduction::residual(&a, &b, &t);
    Ok((rows_of(&t.rotation), t.translation.iter().copied().collect(), residual))
}

/// Flat cluster labels, `-1` for noise. With `precomputed`, `points` is a distance matrix.
#[pyfunction]
#[pyo3(signature = (points, min_cluster_size, min_samples = None, precomputed = false))]
fn hdbscan(
    points: Vec<Vec<f64>>,
    min_cluster_size: usize,
    min_samples: Option<usize>,
    precomputed: bool,
) -> PyResult<Vec<i64>> {
    let x = matrix(&points)?;
    let params = HdbscanParams {
        min_cluster_size,
        min_samples,
    };
    let result = if precomputed {
        hd::fit_precomputed(&x, &params)
    } else {
        hd::fit(&x, &params)
    };
    Ok(result.map_err(err)?.labeling.labels.iter().map(|&l| l as i64).collect())
}

#[pyfunction]
fn npmi(a: &str, b: &str, documents: Vec<Vec<String>>) -> PyResult<f64> {
    metrics::npmi(a, b, &RefDocs::new(documents)).map_err(err)
}

/// Mean per-topic NPMI coherence over `documents`.
#[pyfunction]
fn coherence(topics: Vec<Vec<String>>, documents: Vec<Vec<String>>) -> PyResult<f64> {
    Ok(metrics::topic_coherence(&topics, &RefDocs::new(documents)).map_err(err)?.tc)
}

#[pyfunction]
fn diversity(topics: Vec<Vec<String>>) -> PyResult<f64> {
    metrics::topic_diversity(&topics).map_err(err)
}

#[pyfunction]
fn ari(a: Vec<i64>, b: Vec<i64>) -> PyResult<f64> {
    sy::ari(&a, &b).map_err(err)
}

/// Generates `(corpus, embeddings, truth)` from a JSON generator spec.
#[pyfunction]
#[pyo3(signature = (spec = "{}"))]
fn synth<'py>(py: Python<'py>, spec: &str) -> PyResult<(Corpus, Embeddings, Bound<'py, PyAny>)> {
    let spec: SynthSpec = serde_json::from_str(spec).map_err(|e| ConfigError::new_err(e.to_string()))?;
    let s = sy::generate(&spec).map_err(err)?;
    let truth = to_py(py, &s.truth)?;
    Ok((Corpus { inner: s.corpus }, Embeddings { inner: s.embeddings }, truth))
}

/// Runs every stage. Without `corpus` and `embeddings` the paths in `config` are read.
#[pyfunction]
#[pyo3(signature = (config, corpus = None, embeddings = None, threads = 0))]
fn run(
    py: Python<'_>,
    config: &Config,
    corpus: Option<&Corpus>,
    embeddings: Option<&Embeddings>,
    threads: usize,
) -> PyResult<Bundle> {
    let cfg = config.inner.clone();
    let result = match (corpus, embeddings) {
        (Some(c), Some(e)) => {
            let (c, e) = (c.inner.clone(), e.inner.clone());
            py.detach(move || pipeline::run_with(&cfg, &c, &e, threads))
        }
        (None, None) => py.detach(move || pipeline::run(&cfg, threads)),
        _ => return Err(ConfigError::new_err("pass both corpus and embeddings, or neither")),
    };
    Ok(Bundle {
        inner: result.map_err(err)?,
    })
}

#[pymodule]
fn evotopic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ConfigError", m.py().get_type::<ConfigError>())?;
    m.add("DataError", m.py().get_type::<DataError>())?;
    m.add("SECONDS_PER_DAY", SECONDS_PER_DAY)?;
    m.add_class::<Corpus>()?;
    m.add_class::<Embeddings>()?;
    m.add_class::<Config>()?;
    m.add_class::<Bundle>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(procrustes, m)?)?;
    m.add_function(wrap_pyfunction!(hdbscan, m)?)?;
    m.add_function(wrap_pyfunction!(npmi, m)?)?;
    m.add_function(wrap_pyfunction!(coherence, m)?)?;
    m.add_function(wrap_pyfunction!(diversity, m)?)?;
    m.add_function(wrap_pyfunction!(ari, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
