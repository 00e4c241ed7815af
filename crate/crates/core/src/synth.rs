//! Synthetic timestamped corpora with known clusters and topic chains.
//!
//! Every chain owns a private vocabulary and a center that random-walks in
//! embedding space from window to window. Documents are the chain center plus
//! Gaussian noise, with text drawn from the chain vocabulary mixed with a
//! shared background vocabulary. A fraction of each window's documents is
//! duplicated into the time overlap with the next window so consecutive
//! windows share anchor documents.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, write_corpus, write_embeddings, Corpus, Document, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::windowing::SECONDS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SynthEvent {
    /// Chain first appears at `window`.
    Birth { window: usize, chain: usize },
    /// Chain is absent from `window` onwards.
    Death { window: usize, chain: usize },
    /// From `window` on, `chain` stops and its vocabulary joins `into`.
    Merge { window: usize, chain: usize, into: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub windows: usize,
    /// Chains alive from window 0 (events may add more).
    pub clusters_per_window: usize,
    pub docs_per_cluster: usize,
    pub dim: usize,
    /// Expected norm of one random-walk step of a chain center.
    pub drift_step: f64,
    /// Per-coordinate standard deviation of document noise.
    pub noise_sigma: f64,
    /// Distance between initial chain centers.
    pub separation: f64,
    pub vocab_per_cluster: usize,
    pub background_vocab: usize,
    pub tokens_per_doc: usize,
    /// Probability a token comes from the chain vocabulary rather than the background.
    pub topic_token_prob: f64,
    pub shared_doc_fraction: f64,
    pub events: Vec<SynthEvent>,
    pub window_days: i64,
    pub overlap_days: i64,
    /// First window start, seconds since the epoch (midnight UTC).
    pub start: i64,
    /// Reduced dimension the corpus is meant for; fewer than `reduce_dim + 1`
    /// anchors at a window boundary raises a warning.
    pub reduce_dim: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            windows: 3,
            clusters_per_window: 2,
            docs_per_cluster: 40,
            dim: 32,
            drift_step: 0.5,
            noise_sigma: 1.0,
            separation: 40.0,
            vocab_per_cluster: 30,
            background_vocab: 60,
            tokens_per_doc: 25,
            topic_token_prob: 0.6,
            shared_doc_fraction: 0.3,
            events: Vec::new(),
            window_days: 30,
            overlap_days: 10,
            start: 1_577_836_800,
            reduce_dim: 5,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn n_chains(&self) -> usize {
        self.events
            .iter()
            .map(|e| match *e {
                SynthEvent::Birth { chain, .. } | SynthEvent::Death { chain, .. } => chain,
                SynthEvent::Merge { chain, into, .. } => chain.max(into),
            } + 1)
            .max()
            .unwrap_or(0)
            .max(self.clusters_per_window)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("windows", self.windows),
            ("clusters_per_window", self.clusters_per_window),
            ("docs_per_cluster", self.docs_per_cluster),
            ("dim", self.dim),
            ("vocab_per_cluster", self.vocab_per_cluster),
            ("background_vocab", self.background_vocab),
            ("tokens_per_doc", self.tokens_per_doc),
        ];
        for (name, v) in counts {
            if v < 1 {
                return Err(Error::InvalidSpec(format!("synth {name} must be >= 1")));
            }
        }
        for (name, v) in [
            ("shared_doc_fraction", self.shared_doc_fraction),
            ("topic_token_prob", self.topic_token_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidSpec(format!("synth {name} must lie in [0, 1]")));
            }
        }
        if self.noise_sigma < 0.0 || self.drift_step < 0.0 || self.separation < 0.0 {
            return Err(Error::InvalidSpec("synth scales must be non-negative".into()));
        }
        if self.overlap_days < 0 || self.window_days <= 2 * self.overlap_days {
            return Err(Error::InvalidSpec(
                "synth windows need window_days > 2 * overlap_days >= 0".into(),
            ));
        }
        if self.shared_doc_fraction > 0.0 && self.overlap_days == 0 && self.windows > 1 {
            return Err(Error::InvalidSpec("shared documents need a nonzero overlap".into()));
        }
        for e in &self.events {
            let w = match *e {
                SynthEvent::Birth { window, .. }
                | SynthEvent::Death { window, .. }
                | SynthEvent::Merge { window, .. } => window,
            };
            if w >= self.windows {
                return Err(Error::InvalidSpec(format!("event window {w} out of range")));
            }
        }
        Ok(())
    }

    fn step_seconds(&self) -> i64 {
        (self.window_days - self.overlap_days) * SECONDS_PER_DAY
    }

    pub fn window_start(&self, t: usize) -> i64 {
        self.start + t as i64 * self.step_seconds()
    }

    pub fn window_end(&self, t: usize) -> i64 {
        self.window_start(t) + self.window_days * SECONDS_PER_DAY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocTruth {
    pub id: String,
    /// Window the document was generated for.
    pub window: usize,
    /// Chain's position among the chains alive in `window`.
    pub cluster: usize,
    pub chain: usize,
    /// Duplicated into the overlap with the next window.
    pub shared: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTruth {
    pub chain: usize,
    pub windows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// In corpus order.
    pub documents: Vec<DocTruth>,
    pub chains: Vec<ChainTruth>,
    pub warnings: Vec<String>,
}

impl GroundTruth {
    pub fn chain_of(&self) -> HashMap<&str, usize> {
        self.documents.iter().map(|d| (d.id.as_str(), d.chain)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub embeddings: EmbeddingMatrix,
    pub truth: GroundTruth,
}

pub fn chain_word(chain: usize, j: usize) -> String {
    format!("c{chain}w{j}")
}

pub fn background_word(j: usize) -> String {
    format!("bg{j}")
}

fn gaussian_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

/// Random directions made orthonormal where the dimension allows.
fn initial_centers(rng: &mut ChaCha8Rng, chains: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    let radius = separation / std::f64::consts::SQRT_2;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(chains);
    for k in 0..chains {
        let mut v = gaussian_vec(rng, dim);
        if k < dim {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    basis
        .into_iter()
        .map(|b| b.into_iter().map(|x| x * radius).collect())
        .collect()
}

struct Draft {
    doc: Document,
    embedding: Vec<f32>,
    truth: DocTruth,
}

/// Generates corpus, embeddings and ground truth; deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_chains = spec.n_chains();

    let mut birth = vec![0usize; n_chains];
    for b in birth.iter_mut().skip(spec.clusters_per_window) {
        *b = usize::MAX;
    }
    let mut end = vec![spec.windows; n_chains];
    let mut merges: Vec<(usize, usize, usize)> = Vec::new();
    for e in &spec.events {
        match *e {
            SynthEvent::Birth { window, chain } => birth[chain] = window,
            SynthEvent::Death { window, chain } => end[chain] = end[chain].min(window),
            SynthEvent::Merge { window, chain, into } => {
                end[chain] = end[chain].min(window);
                merges.push((window, chain, into));
            }
        }
    }
    let alive = |k: usize, t: usize| birth[k] <= t && t < end[k];

    let mut centers = initial_centers(&mut rng, n_chains, spec.dim, spec.separation);
    let mut vocab: Vec<Vec<String>> = (0..n_chains)
        .map(|k| (0..spec.vocab_per_cluster).map(|j| chain_word(k, j)).collect())
        .collect();
    let background: Vec<String> = (0..spec.background_vocab).map(background_word).collect();
    let step_scale = spec.drift_step / (spec.dim as f64).sqrt();

    let mut drafts: Vec<Draft> = Vec::new();
    let mut chain_windows: Vec<Vec<usize>> = vec![Vec::new(); n_chains];
    let mut warnings = Vec::new();

    for t in 0..spec.windows {
        for &(w, from, into) in &merges {
            if w == t {
                let moved = vocab[from].clone();
                vocab[into].extend(moved);
            }
        }
        let present: Vec<usize> = (0..n_chains).filter(|&k| alive(k, t)).collect();
        let region_start = if t == 0 {
            spec.window_start(0)
        } else {
            spec.window_start(t) + spec.overlap_days * SECONDS_PER_DAY
        };
        let region_end = if t + 1 == spec.windows {
            spec.window_end(t)
        } else {
            spec.window_start(t + 1)
        };

        let mut window_docs: Vec<Draft> = Vec::new();
        for (cluster, &k) in present.iter().enumerate() {
            chain_windows[k].push(t);
            for i in 0..spec.docs_per_cluster {
                let noise = gaussian_vec(&mut rng, spec.dim);
                let embedding: Vec<f32> = centers[k]
                    .iter()
                    .zip(&noise)
                    .map(|(c, z)| (c + spec.noise_sigma * z) as f32)
                    .collect();
                let words = &vocab[k];
                let text: Vec<&str> = (0..spec.tokens_per_doc)
                    .map(|_| {
                        if rng.random::<f64>() < spec.topic_token_prob {
                            zipf_pick(&mut rng, words)
                        } else {
                            background[rng.random_range(0..background.len())].as_str()
                        }
                    })
                    .collect();
                let text = text.join(" ");
                let id = format!("w{t}c{k}d{i}");
                window_docs.push(Draft {
                    doc: Document {
                        tokens: tokenize(&text, None),
                        id: id.clone(),
                        timestamp: 0,
                        text,
                    },
                    embedding,
                    truth: DocTruth {
                        id,
                        window: t,
                        cluster,
                        chain: k,
                        shared: false,
                    },
                });
            }
        }

        let mut slots: Vec<usize> = (0..window_docs.len()).collect();
        slots.shuffle(&mut rng);
        let span = region_end - region_start;
        let count = window_docs.len() as i64;
        for (d, &slot) in window_docs.iter_mut().zip(&slots) {
            d.doc.timestamp = region_start + span * slot as i64 / count;
        }

        if t + 1 < spec.windows {
            let overlap_start = spec.window_start(t + 1);
            let overlap_span = spec.window_end(t) - overlap_start;
            let per_chain = (spec.shared_doc_fraction * spec.docs_per_cluster as f64).floor() as usize;
            let mut copies = Vec::new();
            for c in 0..present.len() {
                let mut idx: Vec<usize> = (0..spec.docs_per_cluster).map(|i| c * spec.docs_per_cluster + i).collect();
                idx.shuffle(&mut rng);
                for &i in idx.iter().take(per_chain) {
                    let src = &window_docs[i];
                    let id = format!("{}s", src.doc.id);
                    copies.push(Draft {
                        doc: Document {
                            id: id.clone(),
                            timestamp: 0,
                            ..src.doc.clone()
                        },
                        embedding: src.embedding.clone(),
                        truth: DocTruth {
                            id,
                            shared: true,
                            ..src.truth.clone()
                        },
                    });
                }
            }
            let n = copies.len().max(1) as i64;
            for (j, c) in copies.iter_mut().enumerate() {
                c.doc.timestamp = overlap_start + overlap_span * j as i64 / n;
            }
            if copies.len() < spec.reduce_dim + 1 {
                warnings.push(format!(
                    "boundary {t}->{}: {} shared documents, fewer than {}",
                    t + 1,
                    copies.len(),
                    spec.reduce_dim + 1
                ));
            }
            window_docs.extend(copies);
        }
        drafts.extend(window_docs);

        for center in &mut centers {
            for c in center.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *c += step_scale * z;
            }
        }
    }

    drafts.sort_by(|a, b| (a.doc.timestamp, &a.doc.id).cmp(&(b.doc.timestamp, &b.doc.id)));
    let mut values = Vec::with_capacity(drafts.len() * spec.dim);
    let mut docs = Vec::with_capacity(drafts.len());
    let mut truth = Vec::with_capacity(drafts.len());
    for d in drafts {
        values.extend(d.embedding);
        docs.push(d.doc);
        truth.push(d.truth);
    }
    let n = docs.len();
    let corpus = Corpus::from_documents(docs)?;
    let embeddings = EmbeddingMatrix::new(n, spec.dim, values)?;
    let chains = chain_windows
        .into_iter()
        .enumerate()
        .map(|(chain, windows)| ChainTruth { chain, windows })
        .collect();
    Ok(SynthCorpus {
        corpus,
        embeddings,
        truth: GroundTruth {
            documents: truth,
            chains,
            warnings,
        },
    })
}

/// Draws from `words` with weights proportional to `1 / (rank + 1)`.
fn zipf_pick<'a>(rng: &mut ChaCha8Rng, words: &'a [String]) -> &'a str {
    let total: f64 = (1..=words.len()).map(|r| 1.0 / r as f64).sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in words.iter().enumerate() {
        u -= 1.0 / (i + 1) as f64;
        if u <= 0.0 {
            return w;
        }
    }
    words.last().unwrap()
}

/// Adjusted Rand Index between two labelings of the same items.
///
/// When the index's denominator vanishes (both partitions trivial) the
/// result is 1 for identical partitions and 0 otherwise.
pub fn ari<A: Eq + std::hash::Hash, B: Eq + std::hash::Hash>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let mut table: HashMap<(&A, &B), u64> = HashMap::new();
    let mut rows: HashMap<&A, u64> = HashMap::new();
    let mut cols: HashMap<&B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let pairs = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let sum_a: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sum_b: f64 = cols.values().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max_index = (sum_a + sum_b) / 2.0;
    let denom = max_index - expected;
    if denom == 0.0 {
        let identical = table.len() == rows.len() && table.len() == cols.len();
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const EMBEDDINGS_FILE: &str = "embeddings.bin";
pub const TRUTH_FILE: &str = "truth.json";
pub const CONFIG_FILE: &str = "synth.conf";

/// Pipeline settings matching the generated windows, as `key = value` text.
pub fn suggested_config(spec: &SynthSpec, dir: &Path) -> String {
    let origin = chrono::DateTime::from_timestamp(spec.start, 0)
        .map(|d| d.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
        .unwrap_or_default();
    format!(
        "corpus = {}\nembeddings = {}\nwindow.length_days = {}\nwindow.overlap_days = {}\nwindow.origin = {}\nreduce.dim = {}\ncluster.min_cluster_size = {}\nseed = {}\n",
        dir.join(CORPUS_FILE).display(),
        dir.join(EMBEDDINGS_FILE).display(),
        spec.window_days,
        spec.overlap_days,
        origin,
        spec.reduce_dim,
        (spec.docs_per_cluster / 4).max(2),
        spec.seed,
    )
}

/// Writes corpus, embeddings with sidecar, ground truth and a matching config into `dir`.
pub fn write_files(spec: &SynthSpec, synth: &SynthCorpus, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(CORPUS_FILE);
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_corpus(std::io::BufWriter::new(file), synth.corpus.documents()).map_err(|e| Error::io(&path, e))?;
    let ids: Vec<String> = synth.corpus.documents().iter().map(|d| d.id.clone()).collect();
    write_embeddings(&dir.join(EMBEDDINGS_FILE), &ids, &synth.embeddings)?;
    let path = dir.join(TRUTH_FILE);
    let truth = serde_json::to_vec_pretty(&synth.truth).map_err(|e| Error::Internal(e.to_string()))?;
    std::fs::write(&path, truth).map_err(|e| Error::io(&path, e))?;
    let path = dir.join(CONFIG_FILE);
    std::fs::write(&path, suggested_config(spec, dir)).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_window_single_cluster() {
        let spec = SynthSpec {
            windows: 1,
            clusters_per_window: 1,
            docs_per_cluster: 10,
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        assert_eq!(s.corpus.len(), 10);
        assert!(s.truth.documents.iter().all(|d| d.chain == 0));
        assert_eq!(s.embeddings.rows(), 10);
    }

    #[test]
    fn zero_noise_places_documents_on_the_center() {
        let spec = SynthSpec {
            windows: 2,
            noise_sigma: 0.0,
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        let mut first: HashMap<(usize, usize), Vec<f32>> = HashMap::new();
        for (i, d) in s.truth.documents.iter().enumerate() {
            let row = s.embeddings.row(i).to_vec();
            let e = first.entry((d.window, d.chain)).or_insert_with(|| row.clone());
            assert_eq!(*e, row);
        }
    }

    #[test]
    fn same_seed_same_output() {
        let a = generate(&SynthSpec::default()).unwrap();
        let b = generate(&SynthSpec::default()).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.embeddings, b.embeddings);
        let c = generate(&SynthSpec {
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        assert_ne!(a.embeddings, c.embeddings);
    }

    #[test]
    fn sparse_overlap_warns() {
        let spec = SynthSpec {
            docs_per_cluster: 10,
            shared_doc_fraction: 0.1,
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        assert_eq!(s.truth.warnings.len(), 2);
    }

    #[test]
    fn events_shape_lifetimes() {
        let spec = SynthSpec {
            windows: 4,
            clusters_per_window: 2,
            events: vec![
                SynthEvent::Birth { window: 1, chain: 2 },
                SynthEvent::Death { window: 3, chain: 0 },
                SynthEvent::Merge { window: 2, chain: 2, into: 1 },
            ],
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        let lifetimes: Vec<_> = s.truth.chains.iter().map(|c| c.windows.clone()).collect();
        assert_eq!(lifetimes, vec![vec![0, 1, 2], vec![0, 1, 2, 3], vec![1]]);
        assert!(s.corpus.documents().iter().any(|d| d.id.starts_with("w3c1") && d.text.contains("c2w")));
    }

    #[test]
    fn ari_conventions() {
        assert_eq!(ari(&[0, 0, 1, 1], &[5, 5, 9, 9]).unwrap(), 1.0);
        assert_eq!(ari(&[0, 0, 0, 0], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(ari(&[0, 0, 0], &[1, 1, 1]).unwrap(), 1.0);
        assert!(ari(&[0], &[0, 1]).is_err());
    }
}
