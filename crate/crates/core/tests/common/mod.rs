//! Reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use evotopic_core::alignment::LocalCluster;
use evotopic_core::hdbscan;
use evotopic_core::metrics::{self, MetricsContext, PeriodReport, RefScope};
use evotopic_core::pipeline::{self, PipelineConfig, RunBundle};
use evotopic_core::reduction::{self, ReducerSpec};
use evotopic_core::representation;
use evotopic_core::synth::{self, SynthCorpus, SynthSpec};
use evotopic_core::windowing;
use nalgebra::DMatrix;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// Textbook HDBSCAN over raw points: sorted-row core distances, Kruskal over
/// all pairs, cubic agglomeration, a recursive condensed tree and recursive
/// excess-of-mass selection without the root. Returns per-point labels with
/// `-1` for noise; label values are arbitrary.
pub fn naive_hdbscan(points: &[Vec<f64>], min_cluster_size: usize, min_samples: usize) -> Vec<i32> {
    let n = points.len();
    if n < min_cluster_size {
        return vec![-1; n];
    }
    let dist: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| euclid(a, b)).collect())
        .collect();
    naive_hdbscan_from(&dist, min_cluster_size, min_samples)
}

pub fn naive_hdbscan_from(dist: &[Vec<f64>], min_cluster_size: usize, min_samples: usize) -> Vec<i32> {
    let n = dist.len();
    if n < min_cluster_size {
        return vec![-1; n];
    }
    let k = min_samples.min(n);
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| if i == j { 0.0 } else { dist[i][j] }).collect();
            row.sort_by(f64::total_cmp);
            row[k - 1]
        })
        .collect();
    let mr = |a: usize, b: usize| dist[a][b].max(core[a]).max(core[b]);

    // Agglomeration: repeatedly join the two clusters holding the smallest
    // (weight, lo, hi) inter-cluster edge.
    let mut member_of: Vec<usize> = (0..n).collect();
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            points: vec![i],
            children: None,
            height: 0.0,
        })
        .collect();
    let mut active: Vec<usize> = (0..n).collect();
    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            for b in a + 1..n {
                if member_of[a] == member_of[b] {
                    continue;
                }
                let w = mr(a, b);
                let better = match best {
                    None => true,
                    Some((bw, ba, bb)) => (w, a, b).partial_cmp(&(bw, ba, bb)) == Some(std::cmp::Ordering::Less),
                };
                if better {
                    best = Some((w, a, b));
                }
            }
        }
        let (w, a, b) = best.unwrap();
        let (left, right) = (member_of[a], member_of[b]);
        let mut pts = nodes[left].points.clone();
        pts.extend(&nodes[right].points);
        let id = nodes.len();
        for &p in &pts {
            member_of[p] = id;
        }
        nodes.push(Node {
            points: pts,
            children: Some((left, right)),
            height: w,
        });
        active.retain(|&c| c != left && c != right);
        active.push(id);
    }
    let root = active[0];

    // Condensed clusters: each records its points, the lambda each point
    // leaves at, its birth lambda and its child clusters.
    let mut clusters: Vec<Cluster> = Vec::new();
    build_cluster(&nodes, root, 0.0, min_cluster_size, &mut clusters);

    let mut labels = vec![-1; n];
    let roots_children = clusters[0].children.clone();
    let mut next = 0;
    for c in roots_children {
        for sel in select(&clusters, c).1 {
            for &p in &clusters[sel].points {
                labels[p] = next;
            }
            next += 1;
        }
    }
    labels
}

struct Node {
    points: Vec<usize>,
    children: Option<(usize, usize)>,
    height: f64,
}

struct Cluster {
    points: Vec<usize>,
    birth: f64,
    /// Lambda at which each point stops belonging to this cluster.
    leave: Vec<f64>,
    children: Vec<usize>,
}

fn lambda(h: f64) -> f64 {
    if h > 0.0 {
        (1.0 / h).min(hdbscan::LAMBDA_CAP)
    } else {
        hdbscan::LAMBDA_CAP
    }
}

fn build_cluster(nodes: &[Node], start: usize, birth: f64, mcs: usize, out: &mut Vec<Cluster>) -> usize {
    let id = out.len();
    out.push(Cluster {
        points: nodes[start].points.clone(),
        birth,
        leave: Vec::new(),
        children: Vec::new(),
    });
    let mut leave: HashMap<usize, f64> = HashMap::new();
    let mut pending = Vec::new();
    let mut node = start;
    loop {
        let Some((l, r)) = nodes[node].children else {
            leave.insert(nodes[node].points[0], hdbscan::LAMBDA_CAP);
            break;
        };
        let lam = lambda(nodes[node].height);
        let (ls, rs) = (nodes[l].points.len(), nodes[r].points.len());
        if ls >= mcs && rs >= mcs {
            for &p in &nodes[node].points {
                leave.insert(p, lam);
            }
            pending.push((l, lam));
            pending.push((r, lam));
            break;
        }
        if ls < mcs {
            for &p in &nodes[l].points {
                leave.insert(p, lam);
            }
        }
        if rs < mcs {
            for &p in &nodes[r].points {
                leave.insert(p, lam);
            }
        }
        node = match (ls >= mcs, rs >= mcs) {
            (true, false) => l,
            (false, true) => r,
            _ => break,
        };
    }
    out[id].leave = out[id].points.iter().map(|p| leave[p]).collect();
    for (child, lam) in pending {
        let c = build_cluster(nodes, child, lam, mcs, out);
        out[id].children.push(c);
    }
    id
}

/// Returns (propagated stability, selected clusters) for the subtree at `c`.
fn select(clusters: &[Cluster], c: usize) -> (f64, Vec<usize>) {
    let cl = &clusters[c];
    let own: f64 = cl.leave.iter().map(|l| l - cl.birth).sum();
    let mut below = 0.0;
    let mut chosen = Vec::new();
    for &ch in &cl.children {
        let (s, sel) = select(clusters, ch);
        below += s;
        chosen.extend(sel);
    }
    if cl.children.is_empty() || own > below {
        (own, vec![c])
    } else {
        (below, chosen)
    }
}

/// Same partition up to renaming of non-noise labels; noise must coincide.
pub fn same_partition(a: &[i32], b: &[i32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        if (x < 0) != (y < 0) {
            return false;
        }
        if x < 0 {
            continue;
        }
        if *fwd.entry(x).or_insert(y) != y || *back.entry(y).or_insert(x) != x {
            return false;
        }
    }
    true
}

pub fn to_matrix(points: &[Vec<f64>]) -> DMatrix<f64> {
    let dim = points.first().map_or(0, Vec::len);
    DMatrix::from_fn(points.len(), dim, |i, j| points[i][j])
}

/// One member of the synthetic acceptance suite: 2 to 4 chains over 3 to 5
/// windows with chain separation 40 noise standard deviations.
pub fn suite_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        windows: 3 + (seed as usize / 3) % 3,
        clusters_per_window: 2 + seed as usize % 3,
        docs_per_cluster: 40,
        dim: 32,
        drift_step: 0.5,
        noise_sigma: 1.0,
        separation: 40.0,
        shared_doc_fraction: 0.3,
        seed,
        ..SynthSpec::default()
    }
}

pub fn suite_config(spec: &SynthSpec) -> PipelineConfig {
    PipelineConfig {
        window_length_days: spec.window_days,
        window_overlap_days: spec.overlap_days,
        window_origin: Some(spec.start),
        reduce_dim: spec.reduce_dim,
        seed: spec.seed,
        ..PipelineConfig::default()
    }
}

pub fn run_suite_member(seed: u64, threads: usize) -> (SynthSpec, SynthCorpus, RunBundle) {
    let spec = suite_spec(seed);
    let data = synth::generate(&spec).expect("synth");
    let config = suite_config(&spec);
    let bundle = pipeline::run_with(&config, &data.corpus, &data.embeddings, threads).expect("pipeline");
    (spec, data, bundle)
}

/// ARI between predicted evolving topics and true chains, over every
/// (window, document) membership. Noise memberships form one extra class.
pub fn topic_ari(data: &SynthCorpus, bundle: &RunBundle) -> f64 {
    let p = &bundle.payload;
    let mut topic_of: HashMap<(usize, usize), i64> = HashMap::new();
    for t in &p.topics {
        for &part in &t.parts {
            topic_of.insert(part, t.id as i64);
        }
    }
    let mut predicted_of: HashMap<(usize, usize), i64> = HashMap::new();
    for c in &p.local_clusters {
        for &d in &c.members {
            predicted_of.insert((c.window, d), topic_of[&(c.window, c.local_id)]);
        }
    }
    let mut truth = Vec::new();
    let mut predicted = Vec::new();
    for w in &p.windows {
        for &d in &w.members {
            truth.push(data.truth.documents[d].chain);
            predicted.push(predicted_of.get(&(w.index, d)).copied().unwrap_or(-1));
        }
    }
    synth::ari(&truth, &predicted).unwrap()
}

/// Global-clustering baseline: one reduction and one HDBSCAN over all
/// documents pooled, each global cluster then restricted to every window and
/// represented per window.
pub fn baseline_period_report(config: &PipelineConfig, data: &SynthCorpus) -> PeriodReport {
    let corpus = &data.corpus;
    let windows = windowing::segment(corpus, &config.window_spec()).unwrap();
    let all: Vec<usize> = (0..corpus.len()).collect();
    let spec = ReducerSpec {
        target_dim: config.reduce_dim,
        ..ReducerSpec::default()
    };
    let reduced = reduction::reduce_window(&reduction::gather_rows(&data.embeddings, &all), &spec).unwrap();
    let labels = hdbscan::fit(&reduced.coords, &config.hdbscan_params()).unwrap().labeling;
    let global = labels.members();

    let mut clusters = Vec::new();
    for w in &windows {
        let mut local_id = 0;
        for members in &global {
            let inside: Vec<usize> = members.iter().copied().filter(|&d| w.contains(corpus.documents()[d].timestamp)).collect();
            if inside.is_empty() {
                continue;
            }
            clusters.push(LocalCluster {
                window: w.index,
                local_id,
                size: inside.len(),
                members: inside,
                rows: Vec::new(),
                centroid: Vec::new(),
            });
            local_id += 1;
        }
    }
    let reps = representation::ctfidf(corpus, &clusters, config.top_m);
    metrics::period_wise(&MetricsContext {
        corpus,
        windows: &windows,
        clusters: &clusters,
        representations: &reps,
        scope: RefScope::Window,
    })
}
