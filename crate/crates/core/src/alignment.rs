//! Linking per-window clusters into evolving topics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hdbscan::{self, HdbscanParams, Labeling};
use crate::reduction::AlignedProjection;
use crate::windowing::Window;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCluster {
    pub window: usize,
    pub local_id: usize,
    /// Corpus document indices, ascending.
    pub members: Vec<usize>,
    /// Row positions of the members inside the window's projection.
    #[serde(skip)]
    pub rows: Vec<usize>,
    /// Mean of the members' aligned coordinates.
    pub centroid: Vec<f64>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolvingTopic {
    pub id: usize,
    /// `(window, local_id)` pairs, sorted.
    pub parts: Vec<(usize, usize)>,
    pub singleton: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Centroid,
    Single,
    Average,
    Complete,
}

/// One [`LocalCluster`] per non-noise label per window.
pub fn compute_centroids(
    windows: &[Window],
    projection: &AlignedProjection,
    labelings: &[Labeling],
) -> Result<Vec<LocalCluster>> {
    if windows.len() != projection.windows.len() || windows.len() != labelings.len() {
        return Err(Error::LengthMismatch(windows.len(), labelings.len()));
    }
    let mut out = Vec::new();
    for (t, ((window, aligned), labeling)) in windows.iter().zip(&projection.windows).zip(labelings).enumerate() {
        if labeling.labels.len() != window.members.len() {
            return Err(Error::LengthMismatch(labeling.labels.len(), window.members.len()));
        }
        for (local_id, rows) in labeling.members().into_iter().enumerate() {
            let mut centroid = vec![0.0; projection.dim];
            for &r in &rows {
                for (c, v) in centroid.iter_mut().zip(aligned.coords.row(r).iter()) {
                    *c += v;
                }
            }
            for c in &mut centroid {
                *c /= rows.len() as f64;
            }
            out.push(LocalCluster {
                window: t,
                local_id,
                members: rows.iter().map(|&r| window.members[r]).collect(),
                size: rows.len(),
                rows,
                centroid,
            });
        }
    }
    Ok(out)
}

/// Links clusters by running HDBSCAN on their centroids (Euclidean,
/// `min_cluster_size = min_samples = min_link`). Noise centroids become
/// singleton topics. Topic ids follow each topic's earliest part.
pub fn align_clusters(clusters: &[LocalCluster], min_link: usize) -> Result<Vec<EvolvingTopic>> {
    let dim = clusters.first().map_or(0, |c| c.centroid.len());
    let points = DMatrix::from_fn(clusters.len(), dim, |i, j| clusters[i].centroid[j]);
    let labeling = if clusters.len() < min_link {
        Labeling::all_noise(clusters.len())
    } else {
        hdbscan::fit(&points, &link_params(min_link))?.labeling
    };
    Ok(topics_from_labels(clusters, &labeling))
}

/// Links clusters under any [`Linkage`], computing inter-cluster distances
/// from the members' aligned coordinates. `Linkage::Centroid` matches
/// [`align_clusters`].
pub fn align_clusters_with(
    clusters: &[LocalCluster],
    projection: &AlignedProjection,
    linkage: Linkage,
    min_link: usize,
) -> Result<Vec<EvolvingTopic>> {
    if linkage == Linkage::Centroid {
        return align_clusters(clusters, min_link);
    }
    let distances = linkage_distances(clusters, projection, linkage);
    let labeling = if clusters.len() < min_link {
        Labeling::all_noise(clusters.len())
    } else {
        hdbscan::fit_precomputed(&distances, &link_params(min_link))?.labeling
    };
    Ok(topics_from_labels(clusters, &labeling))
}

fn link_params(min_link: usize) -> HdbscanParams {
    HdbscanParams {
        min_cluster_size: min_link,
        min_samples: Some(min_link),
    }
}

/// Pairwise cluster distances under single, average or complete linkage.
pub fn linkage_distances(clusters: &[LocalCluster], projection: &AlignedProjection, linkage: Linkage) -> DMatrix<f64> {
    let n = clusters.len();
    let coords = |c: &LocalCluster, r: usize| projection.windows[c.window].coords.row(c.rows[r]).into_owned();
    let mut d = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a + 1..n {
            let (ca, cb) = (&clusters[a], &clusters[b]);
            let value = if linkage == Linkage::Centroid {
                ca.centroid
                    .iter()
                    .zip(&cb.centroid)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt()
            } else {
                let mut acc = match linkage {
                    Linkage::Single => f64::INFINITY,
                    _ => 0.0,
                };
                for i in 0..ca.rows.len() {
                    let pa = coords(ca, i);
                    for j in 0..cb.rows.len() {
                        let dist = (&pa - coords(cb, j)).norm();
                        acc = match linkage {
                            Linkage::Single => acc.min(dist),
                            Linkage::Complete => acc.max(dist),
                            _ => acc + dist,
                        };
                    }
                }
                if linkage == Linkage::Average {
                    acc / (ca.rows.len() * cb.rows.len()) as f64
                } else {
                    acc
                }
            };
            d[(a, b)] = value;
            d[(b, a)] = value;
        }
    }
    d
}

fn topics_from_labels(clusters: &[LocalCluster], labeling: &Labeling) -> Vec<EvolvingTopic> {
    let mut groups: Vec<Vec<(usize, usize)>> = vec![Vec::new(); labeling.n_clusters()];
    let mut singles = Vec::new();
    for (c, &label) in clusters.iter().zip(&labeling.labels) {
        let part = (c.window, c.local_id);
        if label < 0 {
            singles.push(vec![part]);
        } else {
            groups[label as usize].push(part);
        }
    }
    let mut all: Vec<(Vec<(usize, usize)>, bool)> = groups
        .into_iter()
        .map(|g| (g, false))
        .chain(singles.into_iter().map(|g| (g, true)))
        .collect();
    for (parts, _) in &mut all {
        parts.sort_unstable();
    }
    all.sort_by(|a, b| a.0[0].cmp(&b.0[0]));
    all.into_iter()
        .enumerate()
        .map(|(id, (parts, noise))| EvolvingTopic {
            id,
            singleton: noise || parts.len() == 1,
            parts,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{AlignedWindow, RigidTransform};

    fn cluster(window: usize, local_id: usize, centroid: &[f64]) -> LocalCluster {
        LocalCluster {
            window,
            local_id,
            members: vec![],
            rows: vec![],
            centroid: centroid.to_vec(),
            size: 10,
        }
    }

    #[test]
    fn centroid_is_member_mean() {
        let window = Window {
            index: 0,
            start: 0,
            end: 1,
            members: vec![4, 7, 9],
        };
        let coords = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 2.0, 0.0, 50.0, 50.0]);
        let projection = AlignedProjection {
            dim: 2,
            windows: vec![AlignedWindow {
                coords,
                transform: RigidTransform::identity(2),
                anchor_count: 0,
                unaligned: false,
                passthrough: false,
            }],
        };
        let labeling = Labeling {
            labels: vec![0, 0, -1],
            stabilities: vec![1.0],
        };
        let cs = compute_centroids(std::slice::from_ref(&window), &projection, &[labeling]).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].centroid, vec![1.0, 0.0]);
        assert_eq!(cs[0].members, vec![4, 7]);

        let cs = compute_centroids(&[window], &projection, &[Labeling::all_noise(3)]).unwrap();
        assert!(cs.is_empty());
    }

    #[test]
    fn close_centroids_link() {
        let cs = vec![
            cluster(0, 0, &[0.0, 0.0]),
            cluster(0, 1, &[100.0, 0.0]),
            cluster(1, 0, &[1e-6, 0.0]),
            cluster(1, 1, &[100.0, 1.0]),
            cluster(2, 0, &[0.0, 300.0]),
            cluster(2, 1, &[0.5, 300.0]),
        ];
        let topics = align_clusters(&cs, 2).unwrap();
        assert_eq!(topics[0].parts, vec![(0, 0), (1, 0)]);
        assert!(!topics[0].singleton);
        let total: usize = topics.iter().map(|t| t.parts.len()).sum();
        assert_eq!(total, cs.len());
    }

    #[test]
    fn single_cluster_is_singleton_topic() {
        let topics = align_clusters(&[cluster(3, 0, &[1.0, 2.0])], 2).unwrap();
        assert_eq!(topics.len(), 1);
        assert!(topics[0].singleton);
        assert_eq!(topics[0].parts, vec![(3, 0)]);
    }
}
