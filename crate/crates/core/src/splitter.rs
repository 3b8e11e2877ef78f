//! Splitting of tracklets that mix several identities.
//!
//! Each tracklet's embeddings are clustered with DBSCAN under cosine distance.
//! Unlike textbook DBSCAN, noise points are not dropped: they join the nearest
//! cluster centroid. If more than `k` clusters survive, the closest centroids
//! are merged until `k` remain. Every cluster then becomes its own fragment.

use rayon::prelude::*;

use crate::error::Result;
use crate::types::{dot, Embedding, RefineConfig, TrackSet, Tracklet, ZERO_NORM};

/// Cluster index per point; `None` marks noise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub labels: Vec<Option<usize>>,
    pub num_clusters: usize,
}

impl ClusterLabeling {
    /// Point indices of each cluster, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_clusters];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                members[*c].push(i);
            }
        }
        members
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }
}

fn distance(a: &Embedding, b: &Embedding) -> f64 {
    1.0 - dot(a.unit(), b.unit())
}

/// DBSCAN under cosine distance. A point is core when at least `min_samples`
/// points (itself included) lie within `eps`. Points are scanned in index
/// order, so a border point reachable from several clusters joins the one
/// discovered first.
pub fn dbscan(points: &[Embedding], eps: f64, min_samples: usize) -> ClusterLabeling {
    let n = points.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| distance(&points[i], &points[j]) <= eps)
                .collect()
        })
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_samples).collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut num_clusters = 0;
    for seed in 0..n {
        if labels[seed].is_some() || !is_core[seed] {
            continue;
        }
        let cluster = num_clusters;
        num_clusters += 1;
        labels[seed] = Some(cluster);
        let mut queue = neighbors[seed].clone();
        let mut head = 0;
        while head < queue.len() {
            let q = queue[head];
            head += 1;
            if labels[q].is_some() {
                continue;
            }
            labels[q] = Some(cluster);
            if is_core[q] {
                queue.extend(
                    neighbors[q]
                        .iter()
                        .copied()
                        .filter(|&r| labels[r].is_none()),
                );
            }
        }
    }
    ClusterLabeling {
        labels,
        num_clusters,
    }
}

/// Mean of the member unit vectors, re-normalized. `None` if the mean vanishes.
fn centroid(points: &[Embedding], members: &[usize]) -> Option<Vec<f64>> {
    let dim = points[members[0]].dim();
    let mut sum = vec![0.0; dim];
    for &m in members {
        for (s, v) in sum.iter_mut().zip(points[m].unit()) {
            *s += v;
        }
    }
    let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm >= ZERO_NORM).then(|| sum.into_iter().map(|v| v / norm).collect())
}

fn centroid_distance(point: &[f64], centroid: &Option<Vec<f64>>) -> f64 {
    match centroid {
        Some(c) => 1.0 - dot(point, c),
        None => 1.0,
    }
}

/// Relabels every noise point to the cluster with the nearest centroid, ties to
/// the lower cluster index. Centroids come from the DBSCAN clusters as given.
pub fn assign_outliers(labeling: &ClusterLabeling, points: &[Embedding]) -> ClusterLabeling {
    if labeling.num_clusters == 0 {
        return labeling.clone();
    }
    let centroids: Vec<_> = labeling
        .members()
        .iter()
        .map(|m| centroid(points, m))
        .collect();
    let labels = labeling
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.or_else(|| {
                let mut best = (0, f64::INFINITY);
                for (c, cent) in centroids.iter().enumerate() {
                    let d = centroid_distance(points[i].unit(), cent);
                    if d < best.1 {
                        best = (c, d);
                    }
                }
                Some(best.0)
            })
        })
        .collect();
    ClusterLabeling {
        labels,
        num_clusters: labeling.num_clusters,
    }
}

/// Merges the closest pair of centroids until at most `k` clusters remain,
/// then renumbers clusters by their smallest point index.
pub fn cap_clusters(labeling: &ClusterLabeling, points: &[Embedding], k: usize) -> ClusterLabeling {
    let k = k.max(1);
    let mut clusters = labeling.members();
    while clusters.len() > k {
        let centroids: Vec<_> = clusters.iter().map(|m| centroid(points, m)).collect();
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = match (&centroids[i], &centroids[j]) {
                    (Some(a), Some(b)) => 1.0 - dot(a, b),
                    _ => 1.0,
                };
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        let absorbed = clusters.remove(best.1);
        clusters[best.0].extend(absorbed);
        clusters[best.0].sort_unstable();
    }
    clusters.sort_by_key(|m| m[0]);

    let mut labels = labeling.labels.clone();
    for (c, members) in clusters.iter().enumerate() {
        for &m in members {
            labels[m] = Some(c);
        }
    }
    ClusterLabeling {
        labels,
        num_clusters: clusters.len(),
    }
}

/// Point-index groups the tracklet should be split into, ordered by fragment
/// rank (largest first, ties to the earliest frame). A single group means the
/// tracklet stays whole.
pub fn split_partition(t: &Tracklet, cfg: &RefineConfig) -> Vec<Vec<usize>> {
    let whole = || vec![(0..t.len()).collect()];
    if t.len() < cfg.min_samples() {
        return whole();
    }
    let points = t.embeddings();
    let labeling = dbscan(points, cfg.eps(), cfg.min_samples());
    if labeling.num_clusters <= 1 {
        return whole();
    }
    let labeling = assign_outliers(&labeling, points);
    let labeling = cap_clusters(&labeling, points, cfg.max_clusters());
    if labeling.num_clusters <= 1 {
        return whole();
    }
    let mut groups = labeling.members();
    // members are frame-ordered, so m[0] is the earliest frame
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    groups
}

fn fragments(
    t: &Tracklet,
    groups: Vec<Vec<usize>>,
    ids: &mut impl FnMut() -> u32,
) -> Vec<Tracklet> {
    if groups.len() <= 1 {
        return vec![t.clone()];
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(rank, group)| {
            let id = if rank == 0 { t.id() } else { ids() };
            let pairs = group
                .into_iter()
                .map(|i| (t.observations()[i], t.embeddings()[i].clone()))
                .collect();
            Tracklet::new(id, pairs).expect("fragment of a valid tracklet is valid")
        })
        .collect()
}

/// Splits one tracklet. The largest fragment keeps the original id; the others
/// draw fresh ids from `next_id` in rank order.
pub fn split_tracklet(
    t: &Tracklet,
    cfg: &RefineConfig,
    next_id: &mut impl FnMut() -> u32,
) -> Vec<Tracklet> {
    fragments(t, split_partition(t, cfg), next_id)
}

/// Splits every tracklet of the set. Fresh ids start above the current maximum
/// and are handed out in ascending order of (original id, fragment rank).
pub fn split_all(ts: &TrackSet, cfg: &RefineConfig) -> Result<TrackSet> {
    let partitions: Vec<_> = ts
        .tracklets()
        .par_iter()
        .map(|t| split_partition(t, cfg))
        .collect();
    let mut next = ts.max_id().unwrap_or(0);
    let mut alloc = || {
        next += 1;
        next
    };
    let tracklets = ts
        .tracklets()
        .iter()
        .zip(partitions)
        .flat_map(|(t, groups)| fragments(t, groups, &mut alloc))
        .collect();
    ts.with_tracklets(tracklets)
}
