//! HDBSCAN: mutual-reachability transform, minimum spanning tree, single
//! linkage hierarchy, condensed tree and excess-of-mass cluster selection.
//!
//! Everything is dense and quadratic in the number of points. Ties between
//! equal edge weights are broken by the `(min, max)` vertex pair so results are
//! bit-stable.

use std::cmp::Ordering;
use std::collections::VecDeque;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lambda assigned to splits at distance zero (duplicate points).
pub const LAMBDA_CAP: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HdbscanParams {
    pub min_cluster_size: usize,
    /// Defaults to `min_cluster_size`.
    pub min_samples: Option<usize>,
}

impl HdbscanParams {
    pub fn new(min_cluster_size: usize) -> Self {
        HdbscanParams {
            min_cluster_size,
            min_samples: None,
        }
    }

    pub fn min_samples(&self) -> usize {
        self.min_samples.unwrap_or(self.min_cluster_size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_cluster_size < 2 {
            return Err(Error::InvalidSpec(format!(
                "min_cluster_size must be >= 2, got {}",
                self.min_cluster_size
            )));
        }
        if self.min_samples() < 1 {
            return Err(Error::InvalidSpec("min_samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// Row-major point storage; rows are points.
struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    fn from_matrix(x: &DMatrix<f64>) -> Self {
        let (n, dim) = x.shape();
        let mut data = Vec::with_capacity(n * dim);
        for i in 0..n {
            data.extend(x.row(i).iter());
        }
        Points { dim, data }
    }

    fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    fn dist(&self, a: usize, b: usize) -> f64 {
        let pa = &self.data[a * self.dim..(a + 1) * self.dim];
        let pb = &self.data[b * self.dim..(b + 1) * self.dim];
        pa.iter().zip(pb).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
    }
}

/// Source of pairwise base distances.
enum Distances<'a> {
    Points(Points),
    Matrix(&'a DMatrix<f64>),
}

impl Distances<'_> {
    fn len(&self) -> usize {
        match self {
            Distances::Points(p) => p.len(),
            Distances::Matrix(m) => m.nrows(),
        }
    }

    fn get(&self, a: usize, b: usize) -> f64 {
        match self {
            Distances::Points(p) => p.dist(a, b),
            Distances::Matrix(m) => m[(a, b)],
        }
    }
}

fn core_distances_from(d: &Distances<'_>, k: usize) -> Result<Vec<f64>> {
    let n = d.len();
    if k == 0 || k > n {
        return Err(Error::TooFewPoints { k, n });
    }
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| if i == j { 0.0 } else { d.get(i, j) }).collect();
            let (_, kth, _) = row.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

/// Euclidean distance from each point to its `k`-th nearest neighbour, the
/// point itself counting as the first.
pub fn core_distances(x: &DMatrix<f64>, k: usize) -> Result<Vec<f64>> {
    core_distances_from(&Distances::Points(Points::from_matrix(x)), k)
}

/// Dense mutual-reachability matrix `max(core(a), core(b), |a - b|)` with a zero diagonal.
pub fn mutual_reachability(x: &DMatrix<f64>, cores: &[f64]) -> DMatrix<f64> {
    let pts = Points::from_matrix(x);
    let n = pts.len();
    DMatrix::from_fn(n, n, |a, b| {
        if a == b {
            0.0
        } else {
            pts.dist(a, b).max(cores[a]).max(cores[b])
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Smaller endpoint.
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

impl Edge {
    fn new(u: usize, v: usize, weight: f64) -> Self {
        Edge {
            a: u.min(v),
            b: u.max(v),
            weight,
        }
    }

    /// Total order used for every tie-break: weight, then vertex pair.
    pub fn order(&self, other: &Edge) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Prim's algorithm over an implicit dense graph.
fn prim(n: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<Edge> {
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<Edge>> = vec![None; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let cand = Edge::new(current, v, weight(current, v));
            let slot = &mut best[v];
            if slot.is_none_or(|old| cand.order(&old) == Ordering::Less) {
                *slot = Some(cand);
            }
            let e = slot.unwrap();
            if pick.is_none_or(|p| e.order(&best[p].unwrap()) == Ordering::Less) {
                pick = Some(v);
            }
        }
        let v = pick.expect("graph is complete");
        in_tree[v] = true;
        edges.push(best[v].unwrap());
        current = v;
    }
    edges
}

/// Minimum spanning tree of a dense symmetric weight matrix.
pub fn mst(weights: &DMatrix<f64>) -> Vec<Edge> {
    prim(weights.nrows(), |a, b| weights[(a, b)])
}

/// One agglomeration step. Node ids below `n` are points; merge `i` creates node `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_points: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn root(&self) -> usize {
        self.n_points + self.merges.len() - 1
    }

    fn size_of(&self, node: usize) -> usize {
        if node < self.n_points {
            1
        } else {
            self.merges[node - self.n_points].size
        }
    }

    fn leaves(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < self.n_points {
                out.push(v);
            } else {
                let m = &self.merges[v - self.n_points];
                stack.push(m.right);
                stack.push(m.left);
            }
        }
        out
    }
}

/// Single-linkage merge sequence from MST edges, merging in edge order.
/// The component holding the smaller endpoint becomes the left child.
pub fn build_hierarchy(n_points: usize, mst_edges: &[Edge]) -> Dendrogram {
    let mut edges = mst_edges.to_vec();
    edges.sort_by(Edge::order);

    let total = 2 * n_points.max(1) - 1;
    let mut parent: Vec<usize> = (0..total).collect();
    let mut size = vec![1usize; total];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut merges = Vec::with_capacity(edges.len());
    for (i, e) in edges.iter().enumerate() {
        let left = find(&mut parent, e.a);
        let right = find(&mut parent, e.b);
        let node = n_points + i;
        parent[left] = node;
        parent[right] = node;
        size[node] = size[left] + size[right];
        merges.push(Merge {
            left,
            right,
            distance: e.weight,
            size: size[node],
        });
    }
    Dendrogram { n_points, merges }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CondensedChild {
    Cluster(usize),
    Point(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensedEntry {
    pub parent: usize,
    pub child: CondensedChild,
    /// `1 / distance` at which the child leaves the parent.
    pub lambda: f64,
    pub child_size: usize,
}

/// Cluster hierarchy with sub-minimum splits collapsed into point fall-outs.
/// Cluster 0 is the root; child clusters always have larger ids than their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedTree {
    pub n_points: usize,
    pub n_clusters: usize,
    pub entries: Vec<CondensedEntry>,
}

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        (1.0 / distance).min(LAMBDA_CAP)
    } else {
        LAMBDA_CAP
    }
}

/// Walks the dendrogram breadth-first from the root. A split is kept only if
/// both sides have at least `min_cluster_size` points; the points of an
/// undersized side fall out of the current cluster at the split's lambda.
pub fn condense(dendrogram: &Dendrogram, min_cluster_size: usize) -> CondensedTree {
    let n = dendrogram.n_points;
    let mut entries = Vec::new();
    if n == 0 {
        return CondensedTree {
            n_points: 0,
            n_clusters: 0,
            entries,
        };
    }
    if dendrogram.merges.is_empty() {
        entries.push(CondensedEntry {
            parent: 0,
            child: CondensedChild::Point(0),
            lambda: 0.0,
            child_size: 1,
        });
        return CondensedTree {
            n_points: n,
            n_clusters: 1,
            entries,
        };
    }

    let mut next_cluster = 1;
    let mut queue = VecDeque::from([(dendrogram.root(), 0usize)]);
    let fall_out = |entries: &mut Vec<CondensedEntry>, node: usize, cluster: usize, lambda: f64| {
        for p in dendrogram.leaves(node) {
            entries.push(CondensedEntry {
                parent: cluster,
                child: CondensedChild::Point(p),
                lambda,
                child_size: 1,
            });
        }
    };

    while let Some((node, cluster)) = queue.pop_front() {
        if node < n {
            // a lone point reached as a continuing branch cannot happen with min_cluster_size >= 2
            fall_out(&mut entries, node, cluster, LAMBDA_CAP);
            continue;
        }
        let m = dendrogram.merges[node - n];
        let lambda = lambda_of(m.distance);
        let left_size = dendrogram.size_of(m.left);
        let right_size = dendrogram.size_of(m.right);
        let left_big = left_size >= min_cluster_size;
        let right_big = right_size >= min_cluster_size;
        match (left_big, right_big) {
            (true, true) => {
                for (child, size) in [(m.left, left_size), (m.right, right_size)] {
                    let id = next_cluster;
                    next_cluster += 1;
                    entries.push(CondensedEntry {
                        parent: cluster,
                        child: CondensedChild::Cluster(id),
                        lambda,
                        child_size: size,
                    });
                    queue.push_back((child, id));
                }
            }
            (false, false) => {
                fall_out(&mut entries, m.left, cluster, lambda);
                fall_out(&mut entries, m.right, cluster, lambda);
            }
            (true, false) => {
                fall_out(&mut entries, m.right, cluster, lambda);
                queue.push_back((m.left, cluster));
            }
            (false, true) => {
                fall_out(&mut entries, m.left, cluster, lambda);
                queue.push_back((m.right, cluster));
            }
        }
    }
    CondensedTree {
        n_points: n,
        n_clusters: next_cluster,
        entries,
    }
}

impl CondensedTree {
    /// Birth lambda of every cluster (root is 0).
    pub fn births(&self) -> Vec<f64> {
        let mut birth = vec![0.0; self.n_clusters];
        for e in &self.entries {
            if let CondensedChild::Cluster(c) = e.child {
                birth[c] = e.lambda;
            }
        }
        birth
    }

    /// Parent of every cluster; the root maps to itself.
    pub fn cluster_parents(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n_clusters).collect();
        for e in &self.entries {
            if let CondensedChild::Cluster(c) = e.child {
                parent[c] = e.parent;
            }
        }
        parent
    }

    /// `S(C) = sum over rows leaving C of (lambda - lambda_birth(C)) * size`.
    pub fn stabilities(&self) -> Vec<f64> {
        let birth = self.births();
        let mut s = vec![0.0; self.n_clusters];
        for e in &self.entries {
            s[e.parent] += (e.lambda - birth[e.parent]) * e.child_size as f64;
        }
        s
    }
}

/// Flat clustering: `-1` is noise, clusters numbered by their first member point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: Vec<i32>,
    pub stabilities: Vec<f64>,
}

impl Labeling {
    pub fn all_noise(n: usize) -> Self {
        Labeling {
            labels: vec![-1; n],
            stabilities: Vec::new(),
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.stabilities.len()
    }

    /// Point indices of each cluster label.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters()];
        for (i, &l) in self.labels.iter().enumerate() {
            if l >= 0 {
                out[l as usize].push(i);
            }
        }
        out
    }
}

/// Excess-of-mass selection. Leaf clusters start selected; bottom-up, an
/// inner cluster is kept when its own stability beats the summed stability of
/// the selection beneath it. The root is never selected.
pub fn extract_eom(tree: &CondensedTree) -> Labeling {
    let n = tree.n_points;
    let k = tree.n_clusters;
    if k == 0 {
        return Labeling::all_noise(n);
    }
    let stability = tree.stabilities();
    let parent = tree.cluster_parents();

    let mut has_children = vec![false; k];
    for c in 1..k {
        has_children[parent[c]] = true;
    }
    let mut selected = vec![false; k];
    let mut propagated = vec![0.0; k];
    let mut child_sum = vec![0.0; k];
    for c in (1..k).rev() {
        if !has_children[c] || stability[c] > child_sum[c] {
            selected[c] = true;
            propagated[c] = stability[c];
        } else {
            propagated[c] = child_sum[c];
        }
        child_sum[parent[c]] += propagated[c];
    }
    // keep only the topmost selected cluster on each path
    let mut owner: Vec<Option<usize>> = vec![None; k];
    for c in 1..k {
        owner[c] = match owner[parent[c]] {
            Some(o) => Some(o),
            None if selected[c] => Some(c),
            None => None,
        };
    }

    let mut raw = vec![None; n];
    for e in &tree.entries {
        if let CondensedChild::Point(p) = e.child {
            raw[p] = owner[e.parent];
        }
    }
    canonical_labels(&raw, |c| stability[c])
}

fn canonical_labels(raw: &[Option<usize>], stability_of: impl Fn(usize) -> f64) -> Labeling {
    let mut map = std::collections::HashMap::new();
    let mut stabilities = Vec::new();
    let labels = raw
        .iter()
        .map(|r| match r {
            None => -1,
            Some(c) => *map.entry(*c).or_insert_with(|| {
                stabilities.push(stability_of(*c));
                stabilities.len() as i32 - 1
            }),
        })
        .collect();
    Labeling { labels, stabilities }
}

/// Full result of one clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct HdbscanResult {
    pub labeling: Labeling,
    pub tree: CondensedTree,
}

fn run(d: Distances<'_>, params: &HdbscanParams) -> Result<HdbscanResult> {
    params.validate()?;
    let n = d.len();
    if n < params.min_cluster_size {
        return Ok(HdbscanResult {
            labeling: Labeling::all_noise(n),
            tree: CondensedTree {
                n_points: n,
                n_clusters: 0,
                entries: Vec::new(),
            },
        });
    }
    let k = params.min_samples().min(n);
    let cores = core_distances_from(&d, k)?;
    let edges = prim(n, |a, b| d.get(a, b).max(cores[a]).max(cores[b]));
    let dendrogram = build_hierarchy(n, &edges);
    let tree = condense(&dendrogram, params.min_cluster_size);
    let labeling = extract_eom(&tree);
    Ok(HdbscanResult { labeling, tree })
}

/// Clusters the rows of `x` under the Euclidean metric.
pub fn fit(x: &DMatrix<f64>, params: &HdbscanParams) -> Result<HdbscanResult> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec("hdbscan input must be finite".into()));
    }
    run(Distances::Points(Points::from_matrix(x)), params)
}

/// Clusters from a precomputed symmetric distance matrix.
pub fn fit_precomputed(distances: &DMatrix<f64>, params: &HdbscanParams) -> Result<HdbscanResult> {
    if !distances.is_square() {
        return Err(Error::LengthMismatch(distances.nrows(), distances.ncols()));
    }
    run(Distances::Matrix(distances), params)
}
