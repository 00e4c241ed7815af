//! Configuration, the end-to-end run, and file export.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alignment::{self, EvolvingTopic, Linkage, LocalCluster};
use crate::corpus::{self, Corpus, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::hdbscan::{self, HdbscanParams, Labeling};
use crate::metrics::{self, MetricsContext, PeriodReport, RefScope, TopicReport};
use crate::reduction::{self, AlignedProjection, Metric, ReducerMethod, ReducerSpec};
use crate::representation::{self, TopicRepresentation};
use crate::windowing::{self, Window, WindowSpec, SECONDS_PER_DAY};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Sidecar id list; defaults to `<embeddings>.ids`.
    pub ids: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub window_length_days: i64,
    pub window_overlap_days: i64,
    pub window_origin: Option<i64>,
    pub reduce_method: ReducerMethod,
    pub reduce_dim: usize,
    pub reduce_metric: Metric,
    pub min_cluster_size: usize,
    pub min_samples: Option<usize>,
    pub min_link: usize,
    pub linkage: Linkage,
    pub top_m: usize,
    pub ref_scope: RefScope,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            embeddings: None,
            ids: None,
            stopwords: None,
            out: None,
            window_length_days: 1095,
            window_overlap_days: 365,
            window_origin: None,
            reduce_method: ReducerMethod::Spectral,
            reduce_dim: 5,
            reduce_metric: Metric::Cosine,
            min_cluster_size: 10,
            min_samples: None,
            min_link: 2,
            linkage: Linkage::Centroid,
            top_m: 10,
            ref_scope: RefScope::Window,
            seed: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "corpus",
        "embeddings",
        "ids",
        "stopwords",
        "out",
        "window.length_days",
        "window.overlap_days",
        "window.origin",
        "reduce.method",
        "reduce.dim",
        "reduce.metric",
        "cluster.min_cluster_size",
        "cluster.min_samples",
        "align.min_link",
        "align.linkage",
        "rep.top_m",
        "metrics.ref_scope",
        "seed",
    ];

    /// Sets one key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "corpus" => self.corpus = Some(value.into()),
            "embeddings" => self.embeddings = Some(value.into()),
            "ids" => self.ids = Some(value.into()),
            "stopwords" => self.stopwords = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "window.length_days" => self.window_length_days = parse_num(key, value)?,
            "window.overlap_days" => self.window_overlap_days = parse_num(key, value)?,
            "window.origin" => {
                self.window_origin = if value.is_empty() {
                    None
                } else {
                    let dt = chrono::DateTime::parse_from_rfc3339(value)
                        .map_err(|e| Error::Config(format!("window.origin: {e}")))?;
                    Some(dt.timestamp())
                }
            }
            "reduce.method" => {
                self.reduce_method = match value {
                    "spectral" => ReducerMethod::Spectral,
                    "neighbor-embedding" => ReducerMethod::NeighborEmbedding,
                    _ => return Err(Error::Config(format!("reduce.method: unknown {value:?}"))),
                }
            }
            "reduce.dim" => self.reduce_dim = parse_num(key, value)?,
            "reduce.metric" => {
                self.reduce_metric = match value {
                    "cosine" => Metric::Cosine,
                    "euclidean" => Metric::Euclidean,
                    _ => return Err(Error::Config(format!("reduce.metric: unknown {value:?}"))),
                }
            }
            "cluster.min_cluster_size" => self.min_cluster_size = parse_num(key, value)?,
            "cluster.min_samples" => self.min_samples = Some(parse_num(key, value)?),
            "align.min_link" => self.min_link = parse_num(key, value)?,
            "align.linkage" => {
                self.linkage = match value {
                    "centroid" => Linkage::Centroid,
                    "single" => Linkage::Single,
                    "average" => Linkage::Average,
                    "complete" => Linkage::Complete,
                    _ => return Err(Error::Config(format!("align.linkage: unknown {value:?}"))),
                }
            }
            "rep.top_m" => self.top_m = parse_num(key, value)?,
            "metrics.ref_scope" => {
                self.ref_scope = match value {
                    "window" => RefScope::Window,
                    "topic" => RefScope::Topic,
                    _ => return Err(Error::Config(format!("metrics.ref_scope: unknown {value:?}"))),
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            config.set(key.trim(), value)?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec {
            length: self.window_length_days * SECONDS_PER_DAY,
            overlap: self.window_overlap_days * SECONDS_PER_DAY,
            origin: self.window_origin,
        }
    }

    pub fn reducer_spec(&self) -> ReducerSpec {
        ReducerSpec {
            method: self.reduce_method,
            target_dim: self.reduce_dim,
            metric: self.reduce_metric,
            seed: self.seed,
        }
    }

    pub fn hdbscan_params(&self) -> HdbscanParams {
        HdbscanParams {
            min_cluster_size: self.min_cluster_size,
            min_samples: self.min_samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window_spec().validate().map_err(config_error)?;
        self.hdbscan_params().validate().map_err(config_error)?;
        if self.reduce_dim < 2 {
            return Err(Error::Config("reduce.dim must be >= 2".into()));
        }
        if self.min_link < 2 {
            return Err(Error::Config("align.min_link must be >= 2".into()));
        }
        if self.top_m < 1 {
            return Err(Error::Config("rep.top_m must be >= 1".into()));
        }
        Ok(())
    }

    /// Analysis settings as written back into the bundle (paths excluded).
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("window.length_days", self.window_length_days.to_string());
        put("window.overlap_days", self.window_overlap_days.to_string());
        put(
            "window.origin",
            self.window_origin.map(format_timestamp).unwrap_or_default(),
        );
        put("reduce.method", enum_name(&self.reduce_method));
        put("reduce.dim", self.reduce_dim.to_string());
        put("reduce.metric", enum_name(&self.reduce_metric));
        put("cluster.min_cluster_size", self.min_cluster_size.to_string());
        put(
            "cluster.min_samples",
            self.hdbscan_params().min_samples().to_string(),
        );
        put("align.min_link", self.min_link.to_string());
        put("align.linkage", enum_name(&self.linkage));
        put("rep.top_m", self.top_m.to_string());
        put("metrics.ref_scope", enum_name(&self.ref_scope));
        put("seed", self.seed.to_string());
        m
    }

    pub fn sidecar(&self) -> Option<PathBuf> {
        self.ids
            .clone()
            .or_else(|| self.embeddings.as_deref().map(corpus::sidecar_path))
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::InvalidSpec(m) => Error::Config(m),
        other => other,
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn format_timestamp(ts: i64) -> String {
    chrono::DateTime::from_timestamp(ts, 0)
        .map(|d| d.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        .unwrap_or_else(|| ts.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSummary {
    pub window: usize,
    pub rows: usize,
    pub anchor_count: usize,
    pub unaligned: bool,
    pub passthrough: bool,
    pub rotation: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundlePayload {
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    /// Corpus document ids; every document index in the bundle points here.
    pub documents: Vec<String>,
    pub windows: Vec<Window>,
    pub projection: Vec<ProjectionSummary>,
    pub local_clusters: Vec<LocalCluster>,
    pub topics: Vec<EvolvingTopic>,
    pub representations: Vec<TopicRepresentation>,
    pub period_report: PeriodReport,
    pub topic_report: TopicReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunBundle {
    #[serde(flatten)]
    pub payload: BundlePayload,
    /// SHA-256 over the JSON serialization of `payload`.
    pub content_hash: String,
}

impl RunBundle {
    pub fn seal(payload: BundlePayload) -> Result<Self> {
        let bytes = serde_json::to_vec(&payload).map_err(|e| Error::Internal(e.to_string()))?;
        let content_hash = hex::encode(Sha256::digest(&bytes));
        Ok(RunBundle {
            payload,
            content_hash,
        })
    }

    pub fn verify(&self) -> Result<bool> {
        Ok(RunBundle::seal(self.payload.clone())?.content_hash == self.content_hash)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        serde_json::to_vec_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::MalformedLine {
            line: e.line(),
            message: format!("{}: {e}", path.display()),
        })
    }
}

/// Loaded inputs of a run.
pub struct Inputs {
    pub corpus: Corpus,
    pub embeddings: EmbeddingMatrix,
}

pub fn load_inputs(config: &PipelineConfig) -> Result<Inputs> {
    let corpus_path = config
        .corpus
        .as_deref()
        .ok_or_else(|| Error::Config("no corpus path given".into()))?;
    let emb_path = config
        .embeddings
        .as_deref()
        .ok_or_else(|| Error::Config("no embeddings path given".into()))?;
    let stopwords = config
        .stopwords
        .as_deref()
        .map(corpus::load_stopwords)
        .transpose()
        .map_err(|e| e.in_stage("load"))?;
    let corpus = corpus::load_corpus(corpus_path, stopwords.as_ref()).map_err(|e| e.in_stage("load"))?;
    let sidecar = config.sidecar().expect("embeddings path is set");
    let embeddings = corpus::load_embeddings(emb_path, &sidecar, &corpus).map_err(|e| e.in_stage("load"))?;
    Ok(Inputs { corpus, embeddings })
}

/// Everything the stages produce, before sealing into a bundle.
pub struct RunOutput {
    pub windows: Vec<Window>,
    pub projection: AlignedProjection,
    pub labelings: Vec<Labeling>,
    pub clusters: Vec<LocalCluster>,
    pub topics: Vec<EvolvingTopic>,
    pub representations: Vec<TopicRepresentation>,
    pub period_report: PeriodReport,
    pub topic_report: TopicReport,
}

/// Runs every stage on in-memory inputs.
pub fn run_stages(config: &PipelineConfig, corpus: &Corpus, embeddings: &EmbeddingMatrix) -> Result<RunOutput> {
    config.validate()?;
    if embeddings.rows() != corpus.len() {
        return Err(Error::RowCountMismatch {
            rows: embeddings.rows(),
            documents: corpus.len(),
        }
        .in_stage("load"));
    }

    let windows = windowing::segment(corpus, &config.window_spec()).map_err(|e| e.in_stage("segment"))?;

    let reducer = config.reducer_spec();
    let reduced = windows
        .par_iter()
        .map(|w| reduction::reduce_window(&reduction::gather_rows(embeddings, &w.members), &reducer))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("reduce"))?;
    let projection =
        reduction::align_sequence(&windows, &reduced, config.reduce_dim).map_err(|e| e.in_stage("reduce"))?;

    let params = config.hdbscan_params();
    let labelings = projection
        .windows
        .par_iter()
        .map(|w| hdbscan::fit(&w.coords, &params).map(|r| r.labeling))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("cluster"))?;

    let clusters =
        alignment::compute_centroids(&windows, &projection, &labelings).map_err(|e| e.in_stage("align"))?;
    let topics = alignment::align_clusters_with(&clusters, &projection, config.linkage, config.min_link)
        .map_err(|e| e.in_stage("align"))?;

    let representations = representation::ctfidf(corpus, &clusters, config.top_m);

    let ctx = MetricsContext {
        corpus,
        windows: &windows,
        clusters: &clusters,
        representations: &representations,
        scope: config.ref_scope,
    };
    let period_report = metrics::period_wise(&ctx);
    let topic_report = metrics::topic_wise(&ctx, &topics);

    Ok(RunOutput {
        windows,
        projection,
        labelings,
        clusters,
        topics,
        representations,
        period_report,
        topic_report,
    })
}

pub fn bundle(config: &PipelineConfig, corpus: &Corpus, output: RunOutput) -> Result<RunBundle> {
    let projection = output
        .projection
        .windows
        .iter()
        .enumerate()
        .map(|(t, w)| ProjectionSummary {
            window: t,
            rows: w.coords.nrows(),
            anchor_count: w.anchor_count,
            unaligned: w.unaligned,
            passthrough: w.passthrough,
            rotation: w
                .transform
                .rotation
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            translation: w.transform.translation.iter().copied().collect(),
        })
        .collect();
    RunBundle::seal(BundlePayload {
        config: config.echo(),
        seed: config.seed,
        documents: corpus.documents().iter().map(|d| d.id.clone()).collect(),
        windows: output.windows,
        projection,
        local_clusters: output.clusters,
        topics: output.topics,
        representations: output.representations,
        period_report: output.period_report,
        topic_report: output.topic_report,
    })
}

/// Runs on in-memory inputs, using `threads` worker threads (0 = rayon default).
pub fn run_with(config: &PipelineConfig, corpus: &Corpus, embeddings: &EmbeddingMatrix, threads: usize) -> Result<RunBundle> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    pool.install(|| {
        let output = run_stages(config, corpus, embeddings)?;
        bundle(config, corpus, output)
    })
}

/// Loads the configured inputs and runs every stage.
pub fn run(config: &PipelineConfig, threads: usize) -> Result<RunBundle> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    run_with(config, &inputs.corpus, &inputs.embeddings, threads)
}

/// Recomputes both reports from a persisted bundle and the corpus.
pub fn recompute_reports(bundle: &RunBundle, corpus: &Corpus, scope: RefScope) -> Result<(PeriodReport, TopicReport)> {
    let ids: Vec<&str> = corpus.documents().iter().map(|d| d.id.as_str()).collect();
    if ids != bundle.payload.documents.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Config("bundle was produced from a different corpus".into()));
    }
    let p = &bundle.payload;
    let ctx = MetricsContext {
        corpus,
        windows: &p.windows,
        clusters: &p.local_clusters,
        representations: &p.representations,
        scope,
    };
    Ok((metrics::period_wise(&ctx), metrics::topic_wise(&ctx, &p.topics)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub evolving_topic_id: usize,
    pub window_index: usize,
    pub window_start: String,
    pub rank: usize,
    pub token: String,
    pub weight: f64,
}

pub fn plot_rows(bundle: &RunBundle) -> Vec<PlotRow> {
    let p = &bundle.payload;
    let mut rows = Vec::new();
    for topic in &p.topics {
        for &(w, local) in &topic.parts {
            let Some(rep) = p
                .representations
                .iter()
                .find(|r| r.window == w && r.local_id == local)
            else {
                continue;
            };
            for (rank, (token, weight)) in rep.terms.iter().enumerate() {
                rows.push(PlotRow {
                    evolving_topic_id: topic.id,
                    window_index: w,
                    window_start: format_timestamp(p.windows[w].start),
                    rank: rank + 1,
                    token: token.clone(),
                    weight: *weight,
                });
            }
        }
    }
    rows
}

#[derive(Serialize, Deserialize)]
pub struct TopicsFile {
    pub topics: Vec<TopicEntry>,
}

#[derive(Serialize, Deserialize)]
pub struct TopicEntry {
    pub id: usize,
    pub singleton: bool,
    pub parts: Vec<PartEntry>,
}

#[derive(Serialize, Deserialize)]
pub struct PartEntry {
    pub window: usize,
    pub local_id: usize,
    pub window_start: String,
    pub size: usize,
    pub terms: Vec<TermEntry>,
}

#[derive(Serialize, Deserialize)]
pub struct TermEntry {
    pub token: String,
    pub weight: f64,
}

pub fn topics_file(bundle: &RunBundle) -> TopicsFile {
    let p = &bundle.payload;
    let topics = p
        .topics
        .iter()
        .map(|t| TopicEntry {
            id: t.id,
            singleton: t.singleton,
            parts: t
                .parts
                .iter()
                .map(|&(w, local)| {
                    let size = p
                        .local_clusters
                        .iter()
                        .find(|c| c.window == w && c.local_id == local)
                        .map_or(0, |c| c.size);
                    let terms = p
                        .representations
                        .iter()
                        .find(|r| r.window == w && r.local_id == local)
                        .map(|r| {
                            r.terms
                                .iter()
                                .map(|(token, weight)| TermEntry {
                                    token: token.clone(),
                                    weight: *weight,
                                })
                                .collect()
                        })
                        .unwrap_or_default();
                    PartEntry {
                        window: w,
                        local_id: local,
                        window_start: format_timestamp(p.windows[w].start),
                        size,
                        terms,
                    }
                })
                .collect(),
        })
        .collect();
    TopicsFile { topics }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::io(path, std::io::Error::other(e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_period_csv(path: &Path, report: &PeriodReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["window", "topic_count", "tc", "td", "quality", "skipped_topics", "gap"])
        .map_err(csv_err(path))?;
    for r in &report.rows {
        w.write_record([
            r.window.to_string(),
            r.topic_count.to_string(),
            opt(r.tc),
            opt(r.td),
            opt(r.quality),
            r.skipped_topics.to_string(),
            r.gap.clone().unwrap_or_default(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_topic_csv(path: &Path, report: &TopicReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["topic", "part_count", "scored_parts", "tc", "td", "quality"])
        .map_err(csv_err(path))?;
    for r in &report.rows {
        w.write_record([
            r.topic.to_string(),
            r.part_count.to_string(),
            r.scored_parts.to_string(),
            opt(r.tc),
            opt(r.td),
            opt(r.quality),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_plot_csv(path: &Path, bundle: &RunBundle) -> Result<usize> {
    let mut w = csv_writer(path)?;
    w.write_record(["evolving_topic_id", "window_index", "window_start", "rank", "token", "weight"])
        .map_err(csv_err(path))?;
    let rows = plot_rows(bundle);
    for r in &rows {
        w.serialize((
            r.evolving_topic_id,
            r.window_index,
            &r.window_start,
            r.rank,
            &r.token,
            r.weight,
        ))
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(rows.len())
}

pub const BUNDLE_FILE: &str = "bundle.json";
pub const TOPICS_FILE: &str = "topics.json";
pub const PERIOD_FILE: &str = "period_report.csv";
pub const TOPIC_REPORT_FILE: &str = "topic_report.csv";
pub const PLOT_FILE: &str = "plot_data.csv";

/// Writes the bundle, topics JSON, both report CSVs and the plot-data CSV.
pub fn export(bundle: &RunBundle, outdir: &Path) -> Result<()> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let path = outdir.join(BUNDLE_FILE);
    fs::write(&path, bundle.to_json()?).map_err(|e| Error::io(&path, e))?;
    let path = outdir.join(TOPICS_FILE);
    let topics = serde_json::to_vec_pretty(&topics_file(bundle)).map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(&path, topics).map_err(|e| Error::io(&path, e))?;
    write_period_csv(&outdir.join(PERIOD_FILE), &bundle.payload.period_report)?;
    write_topic_csv(&outdir.join(TOPIC_REPORT_FILE), &bundle.payload.topic_report)?;
    write_plot_csv(&outdir.join(PLOT_FILE), bundle)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config() {
        let c = PipelineConfig::parse(
            "# experiment\nreduce.dim = 3\nalign.linkage=average  # inline\nwindow.origin = 2020-01-01T00:00:00Z\n",
        )
        .unwrap();
        assert_eq!(c.reduce_dim, 3);
        assert_eq!(c.linkage, Linkage::Average);
        assert_eq!(c.window_origin, Some(1_577_836_800));
        assert_eq!(c.echo()["align.linkage"], "average");
        assert_eq!(c.echo()["cluster.min_samples"], "10");
    }

    #[test]
    fn unknown_and_bad_keys_are_config_errors() {
        let e = PipelineConfig::parse("reduce.dims = 3\n").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert_eq!(e.exit_code(), 2);
        assert!(PipelineConfig::parse("reduce.dim = many\n").is_err());
        assert!(PipelineConfig::parse("just words\n").is_err());
        let c = PipelineConfig::parse("window.overlap_days = 2000\n").unwrap();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn defaults_follow_experiment_settings() {
        let c = PipelineConfig::default();
        assert_eq!((c.reduce_dim, c.reduce_metric), (5, Metric::Cosine));
        assert_eq!((c.min_cluster_size, c.min_link, c.top_m), (10, 2, 10));
        assert_eq!(c.hdbscan_params().min_samples(), 10);
    }
}
