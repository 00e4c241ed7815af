//! Per-window dimension reduction and Procrustes chaining of the windows into
//! one shared coordinate frame.
//!
//! Each window is reduced on its own, so two windows land in unrelated
//! coordinate systems. Documents present in both of two consecutive windows
//! (the overlap) act as anchors: an orthogonal transform plus translation
//! fitted on them maps window `t` onto the already aligned window `t - 1`.
//! Window 0 is the reference frame.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::windowing::Window;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReducerMethod {
    /// Truncated SVD of the centered window.
    Spectral,
    /// Fuzzy-neighbor-graph layout, initialised from the spectral projection.
    NeighborEmbedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Cosine,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducerSpec {
    pub method: ReducerMethod,
    pub target_dim: usize,
    pub metric: Metric,
    pub seed: u64,
}

impl Default for ReducerSpec {
    fn default() -> Self {
        ReducerSpec {
            method: ReducerMethod::Spectral,
            target_dim: 5,
            metric: Metric::Cosine,
            seed: 0,
        }
    }
}

/// Output of [`reduce_window`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedWindow {
    pub coords: DMatrix<f64>,
    /// Window had fewer than `target_dim + 1` rows and was copied through.
    pub passthrough: bool,
}

/// Reduces an `n x z` window to `n x p`.
///
/// Windows with fewer than `p + 1` rows cannot support a `p`-dimensional fit;
/// their first `p` input columns are copied through unchanged and the result
/// is flagged.
pub fn reduce_window(x: &DMatrix<f64>, spec: &ReducerSpec) -> Result<ReducedWindow> {
    let p = spec.target_dim;
    if p < 2 {
        return Err(Error::InvalidSpec(format!("target dimension must be >= 2, got {p}")));
    }
    if x.ncols() < p {
        return Err(Error::InvalidSpec(format!(
            "target dimension {p} exceeds input dimension {}",
            x.ncols()
        )));
    }
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: pos % x.nrows(),
            col: pos / x.nrows(),
        });
    }
    let n = x.nrows();
    if n < p + 1 {
        return Ok(ReducedWindow {
            coords: x.columns(0, p).into_owned(),
            passthrough: true,
        });
    }

    let mut data = x.clone();
    if spec.metric == Metric::Cosine {
        normalize_rows(&mut data);
    }
    let coords = match spec.method {
        ReducerMethod::Spectral => spectral(&data, p),
        ReducerMethod::NeighborEmbedding => neighbor_embedding(&data, p, spec.seed),
    };
    Ok(ReducedWindow {
        coords,
        passthrough: false,
    })
}

fn normalize_rows(x: &mut DMatrix<f64>) {
    for mut row in x.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
}

fn column_means(x: &DMatrix<f64>) -> RowDVector<f64> {
    x.row_mean()
}

fn centered(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = column_means(x);
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    c
}

/// Centered data projected on its top-`p` right singular directions. Each
/// direction is signed so its largest-magnitude entry is positive.
fn spectral(x: &DMatrix<f64>, p: usize) -> DMatrix<f64> {
    let xc = centered(x);
    let svd = xc.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let z = x.ncols();
    let mut basis = DMatrix::zeros(z, p);
    for (j, &k) in order.iter().take(p).enumerate() {
        let mut dir: DVector<f64> = v_t.row(k).transpose();
        let lead = dir
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |best, (i, &v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
            .0;
        if dir[lead] < 0.0 {
            dir.neg_mut();
        }
        basis.set_column(j, &dir);
    }
    xc * basis
}

// Fuzzy-graph layout constants for min_dist = 0.1, spread = 1.
const CURVE_A: f64 = 1.577;
const CURVE_B: f64 = 0.8951;
const LAYOUT_EPOCHS: usize = 200;
const NEGATIVE_SAMPLES: usize = 5;
const MAX_NEIGHBORS: usize = 15;

/// Small deterministic neighbor-embedding layout: a symmetrised fuzzy kNN
/// graph optimised by edge-sampled SGD, starting from the spectral projection.
#[allow(clippy::needless_range_loop)]
fn neighbor_embedding(x: &DMatrix<f64>, p: usize, seed: u64) -> DMatrix<f64> {
    let n = x.nrows();
    let k = MAX_NEIGHBORS.min(n - 1);
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let dist = |a: usize, b: usize| -> f64 {
        rows[a]
            .iter()
            .zip(&rows[b])
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    };

    // directed memberships
    let mut directed: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut nbrs: Vec<(usize, f64)> = (0..n).filter(|&j| j != i).map(|j| (j, dist(i, j))).collect();
        nbrs.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        nbrs.truncate(k);
        let rho = nbrs.iter().map(|e| e.1).find(|&d| d > 0.0).unwrap_or(0.0);
        let target = (k as f64).log2();
        let (mut lo, mut hi, mut sigma) = (0.0f64, f64::INFINITY, 1.0f64);
        for _ in 0..64 {
            let s: f64 = nbrs.iter().map(|e| (-((e.1 - rho).max(0.0)) / sigma).exp()).sum();
            if (s - target).abs() < 1e-5 {
                break;
            }
            if s > target {
                hi = sigma;
                sigma = (lo + hi) / 2.0;
            } else {
                lo = sigma;
                sigma = if hi.is_finite() { (lo + hi) / 2.0 } else { sigma * 2.0 };
            }
        }
        directed.push(
            nbrs.into_iter()
                .map(|(j, d)| (j, (-((d - rho).max(0.0)) / sigma.max(1e-12)).exp()))
                .collect(),
        );
    }
    let mut edges = std::collections::BTreeMap::new();
    for (i, nbrs) in directed.iter().enumerate() {
        for &(j, w) in nbrs {
            let key = (i.min(j), i.max(j));
            let e = edges.entry(key).or_insert((0.0, 0.0));
            if i < j {
                e.0 = w;
            } else {
                e.1 = w;
            }
        }
    }
    let edges: Vec<(usize, usize, f64)> = edges
        .into_iter()
        .map(|((a, b), (u, v))| (a, b, u + v - u * v))
        .filter(|e| e.2 > 0.0)
        .collect();

    let init = spectral(x, p);
    let scale = init.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut emb: Vec<Vec<f64>> = init
        .row_iter()
        .map(|r| r.iter().map(|v| if scale > 0.0 { 10.0 * v / scale } else { 0.0 }).collect())
        .collect();
    if edges.is_empty() {
        return init;
    }

    let max_w = edges.iter().fold(0.0f64, |m, e| m.max(e.2));
    let every: Vec<f64> = edges.iter().map(|e| max_w / e.2).collect();
    let mut next_due = every.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clip = |g: f64| g.clamp(-4.0, 4.0);

    for epoch in 0..LAYOUT_EPOCHS {
        let alpha = 1.0 - epoch as f64 / LAYOUT_EPOCHS as f64;
        for (e, &(a, b, _)) in edges.iter().enumerate() {
            if next_due[e] > (epoch + 1) as f64 {
                continue;
            }
            next_due[e] += every[e];
            let d2: f64 = emb[a].iter().zip(&emb[b]).map(|(u, v)| (u - v) * (u - v)).sum();
            if d2 > 0.0 {
                let coeff = -2.0 * CURVE_A * CURVE_B * d2.powf(CURVE_B - 1.0) / (CURVE_A * d2.powf(CURVE_B) + 1.0);
                for c in 0..p {
                    let g = clip(coeff * (emb[a][c] - emb[b][c])) * alpha;
                    emb[a][c] += g;
                    emb[b][c] -= g;
                }
            }
            for _ in 0..NEGATIVE_SAMPLES {
                let other = rng.random_range(0..n);
                if other == a {
                    continue;
                }
                let d2: f64 = emb[a].iter().zip(&emb[other]).map(|(u, v)| (u - v) * (u - v)).sum();
                let coeff = if d2 > 0.0 {
                    2.0 * CURVE_B / ((0.001 + d2) * (CURVE_A * d2.powf(CURVE_B) + 1.0))
                } else {
                    0.0
                };
                for c in 0..p {
                    let g = if coeff > 0.0 { clip(coeff * (emb[a][c] - emb[other][c])) } else { 4.0 };
                    emb[a][c] += g * alpha;
                }
            }
        }
    }
    DMatrix::from_fn(n, p, |i, j| emb[i][j])
}

/// Orthogonal map plus translation taking moving points onto reference points.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform {
    /// `p x p`, applied on the right: `y = x * rotation + translation`.
    pub rotation: DMatrix<f64>,
    pub translation: RowDVector<f64>,
}

impl RigidTransform {
    pub fn identity(p: usize) -> Self {
        RigidTransform {
            rotation: DMatrix::identity(p, p),
            translation: RowDVector::zeros(p),
        }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = x * &self.rotation;
        for mut row in y.row_iter_mut() {
            row += &self.translation;
        }
        y
    }
}

/// Orthogonal Procrustes with translation and no scaling.
///
/// Returns the `R` (orthogonal) and `b` minimising
/// `|| reference - (moving * R + b) ||_F`.
pub fn procrustes(reference: &DMatrix<f64>, moving: &DMatrix<f64>) -> Result<RigidTransform> {
    let (k, p) = reference.shape();
    if moving.shape() != (k, p) {
        return Err(Error::LengthMismatch(moving.nrows(), k));
    }
    if k <= p {
        return Err(Error::UnderdeterminedAnchors { anchors: k, dim: p });
    }
    if reference.iter().chain(moving.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec("procrustes anchors must be finite".into()));
    }
    let ref_mean = column_means(reference);
    let mov_mean = column_means(moving);
    let cross = centered(moving).transpose() * centered(reference);
    let svd = cross.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let rotation = u * v_t;
    let translation = ref_mean - mov_mean * &rotation;
    Ok(RigidTransform {
        rotation,
        translation,
    })
}

/// Frobenius norm of `reference - transform(moving)`.
pub fn residual(reference: &DMatrix<f64>, moving: &DMatrix<f64>, transform: &RigidTransform) -> f64 {
    (reference - transform.apply(moving)).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedWindow {
    /// Rows follow `Window::members` order.
    pub coords: DMatrix<f64>,
    pub transform: RigidTransform,
    pub anchor_count: usize,
    /// Too few anchors for a fit; identity transform used.
    pub unaligned: bool,
    pub passthrough: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedProjection {
    pub dim: usize,
    pub windows: Vec<AlignedWindow>,
}

/// Rows of the two windows belonging to documents present in both.
fn shared_rows(prev: &Window, cur: &Window) -> (Vec<usize>, Vec<usize>) {
    let (mut i, mut j) = (0, 0);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    while i < prev.members.len() && j < cur.members.len() {
        match prev.members[i].cmp(&cur.members[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                a.push(i);
                b.push(j);
                i += 1;
                j += 1;
            }
        }
    }
    (a, b)
}

/// Chains raw per-window coordinates into window 0's frame.
///
/// For `t >= 1` the transform is fitted on the anchors' raw coordinates in
/// window `t` against their aligned coordinates in window `t - 1`, then
/// applied to every row of window `t`. With `anchors <= p` the window keeps
/// the identity transform and is flagged `unaligned`.
pub fn align_sequence(windows: &[Window], raw: &[ReducedWindow], dim: usize) -> Result<AlignedProjection> {
    if windows.len() != raw.len() {
        return Err(Error::LengthMismatch(windows.len(), raw.len()));
    }
    let mut out: Vec<AlignedWindow> = Vec::with_capacity(windows.len());
    for (t, (window, reduced)) in windows.iter().zip(raw).enumerate() {
        if reduced.coords.nrows() != window.members.len() || reduced.coords.ncols() != dim {
            return Err(Error::Internal(format!(
                "window {t}: coords {:?} do not match {} members x {dim}",
                reduced.coords.shape(),
                window.members.len()
            )));
        }
        if t == 0 {
            out.push(AlignedWindow {
                coords: reduced.coords.clone(),
                transform: RigidTransform::identity(dim),
                anchor_count: 0,
                unaligned: false,
                passthrough: reduced.passthrough,
            });
            continue;
        }
        let (prev_rows, cur_rows) = shared_rows(&windows[t - 1], window);
        let anchors = prev_rows.len();
        let (transform, unaligned) = if anchors > dim {
            let reference = out[t - 1].coords.select_rows(&prev_rows);
            let moving = reduced.coords.select_rows(&cur_rows);
            (procrustes(&reference, &moving)?, false)
        } else {
            (RigidTransform::identity(dim), true)
        };
        out.push(AlignedWindow {
            coords: transform.apply(&reduced.coords),
            transform,
            anchor_count: anchors,
            unaligned,
            passthrough: reduced.passthrough,
        });
    }
    Ok(AlignedProjection { dim, windows: out })
}

/// Copies selected embedding rows into an `f64` matrix.
pub fn gather_rows(embeddings: &crate::corpus::EmbeddingMatrix, rows: &[usize]) -> DMatrix<f64> {
    let z = embeddings.dim();
    DMatrix::from_fn(rows.len(), z, |i, j| embeddings.row(rows[i])[j] as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation2(theta: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()])
    }

    fn pairwise(x: &DMatrix<f64>) -> Vec<f64> {
        let mut d = Vec::new();
        for i in 0..x.nrows() {
            for j in i + 1..x.nrows() {
                d.push((x.row(i) - x.row(j)).norm());
            }
        }
        d
    }

    #[test]
    fn identical_rows_reduce_to_zero() {
        let x = DMatrix::from_fn(8, 6, |_, j| j as f64 + 1.0);
        let spec = ReducerSpec {
            target_dim: 2,
            ..Default::default()
        };
        let r = reduce_window(&x, &spec).unwrap();
        assert!(r.coords.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn embedded_low_dim_data_keeps_distances() {
        let base = DMatrix::from_fn(12, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + 0.1 * j as f64);
        let x = DMatrix::from_fn(12, 8, |i, j| if j < 3 { base[(i, j)] } else { 0.0 });
        let spec = ReducerSpec {
            target_dim: 3,
            metric: Metric::Euclidean,
            ..Default::default()
        };
        let r = reduce_window(&x, &spec).unwrap();
        for (a, b) in pairwise(&base).iter().zip(pairwise(&r.coords)) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn small_window_passes_through() {
        let x = DMatrix::from_fn(3, 6, |i, j| (i + j) as f64);
        let r = reduce_window(&x, &ReducerSpec::default()).unwrap();
        assert!(r.passthrough);
        assert_eq!(r.coords, x.columns(0, 5).into_owned());
    }

    #[test]
    fn reducer_rejects_bad_inputs() {
        let x = DMatrix::from_fn(10, 3, |i, j| (i * j) as f64);
        assert!(matches!(reduce_window(&x, &ReducerSpec::default()), Err(Error::InvalidSpec(_))));
        let mut y = DMatrix::from_fn(10, 8, |i, j| (i * j) as f64);
        y[(4, 2)] = f64::NAN;
        assert!(matches!(
            reduce_window(&y, &ReducerSpec::default()),
            Err(Error::NonFinite { row: 4, col: 2 })
        ));
    }

    #[test]
    fn neighbor_embedding_is_deterministic() {
        let x = DMatrix::from_fn(40, 8, |i, j| ((i * 31 + j * 17) % 13) as f64 + if i < 20 { 0.0 } else { 30.0 });
        let spec = ReducerSpec {
            method: ReducerMethod::NeighborEmbedding,
            target_dim: 2,
            metric: Metric::Euclidean,
            seed: 7,
        };
        let a = reduce_window(&x, &spec).unwrap();
        let b = reduce_window(&x, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.coords.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn procrustes_identity() {
        let a = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 3.0, 1.0]);
        let t = procrustes(&a, &a).unwrap();
        assert!((&t.rotation - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
        assert!(t.translation.amax() < 1e-10);
    }

    #[test]
    fn procrustes_recovers_known_motion() {
        let a = DMatrix::from_row_slice(5, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 3.0, 1.0, -1.0, 4.0]);
        let q = rotation2(0.7);
        let shift = RowDVector::from_row_slice(&[3.0, -2.0]);
        let mut moving = &a * &q;
        for mut row in moving.row_iter_mut() {
            row += &shift;
        }
        let t = procrustes(&a, &moving).unwrap();
        assert!((&t.rotation - q.transpose()).amax() < 1e-10);
        assert!(residual(&a, &moving, &t) <= 1e-8);
    }

    #[test]
    fn procrustes_needs_more_anchors_than_dims() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            procrustes(&a, &a),
            Err(Error::UnderdeterminedAnchors { anchors: 2, dim: 2 })
        ));
    }

    fn window(index: usize, members: Vec<usize>) -> Window {
        Window {
            index,
            start: 0,
            end: 1,
            members,
        }
    }

    #[test]
    fn equal_anchor_coordinates_give_identity() {
        let w0 = window(0, (0..6).collect());
        let w1 = window(1, (2..8).collect());
        let c0 = DMatrix::from_fn(6, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 + 0.3 * (i * j) as f64);
        // window 1 rows 0..4 are docs 2..5, equal to window 0 rows 2..5
        let c1 = DMatrix::from_fn(6, 2, |i, j| if i < 4 { c0[(i + 2, j)] } else { 10.0 + (i + j) as f64 });
        let raw = [
            ReducedWindow { coords: c0.clone(), passthrough: false },
            ReducedWindow { coords: c1, passthrough: false },
        ];
        let aligned = align_sequence(&[w0, w1], &raw, 2).unwrap();
        let w = &aligned.windows[1];
        assert_eq!(w.anchor_count, 4);
        assert!(!w.unaligned);
        assert!((&w.transform.rotation - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
        for r in 0..4 {
            assert!((w.coords.row(r) - c0.row(r + 2)).amax() < 1e-10);
        }
    }

    #[test]
    fn too_few_anchors_fall_back_to_identity() {
        let w0 = window(0, vec![0, 1, 2]);
        let w1 = window(1, vec![2, 3, 4]);
        let c = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64);
        let raw = [
            ReducedWindow { coords: c.clone(), passthrough: true },
            ReducedWindow { coords: c.clone(), passthrough: true },
        ];
        let aligned = align_sequence(&[w0, w1], &raw, 2).unwrap();
        assert!(aligned.windows[1].unaligned);
        assert_eq!(aligned.windows[1].anchor_count, 1);
        assert_eq!(aligned.windows[1].coords, c);
    }
}
