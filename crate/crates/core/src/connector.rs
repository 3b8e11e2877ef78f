//! Merging of tracklets fragmented from one identity.
//!
//! The distance between two tracklets is the mean pairwise cosine distance of
//! their embeddings, or 1 when their frame intervals overlap. Pairs whose exit
//! and entry centers are too far apart relative to the scene extent are also
//! pinned to 1. Tracklets are then merged greedily, closest pair first, while
//! that distance stays below the merge threshold.
//!
//! A merged tracklet remembers the input tracklets it was built from. Two
//! merged tracklets may only join when no input of one overlaps in time with
//! an input of the other, and the spatial gate is checked at every new
//! junction between them. Fragments of one identity can therefore rejoin in
//! any order, while inputs that interleave in time never do.
//!
//! The mean pairwise distance factorizes over cached feature sums:
//! `mean(1 - a_m·b_n) = 1 - (Σa_m)·(Σb_n) / (N_a N_b)`, so each entry costs one
//! dot product regardless of tracklet length.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{dot, temporal_overlap, RefineConfig, TrackSet, Tracklet};

/// Entries at this value are never merged.
pub const FORBIDDEN: f64 = 1.0;

const CLAMP_SLACK: f64 = 1e-9;

/// Symmetric tracklet distance matrix, indexed like `TrackSet::tracklets()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn filled(n: usize, value: f64) -> Self {
        Self {
            n,
            entries: vec![value; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Writes both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.n + j] = value;
        self.entries[j * self.n + i] = value;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Exit/entry distance limits, `β · extent` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGate {
    pub theta_hor: f64,
    pub theta_ver: f64,
}

impl SpatialGate {
    pub fn new(ts: &TrackSet, beta: f64) -> Self {
        Self {
            theta_hor: beta * ts.extent_hor(),
            theta_ver: beta * ts.extent_ver(),
        }
    }

    /// True when the earlier tracklet's exit and the later one's entry are too
    /// far apart on either axis. Overlapping pairs are never judged here.
    pub fn blocks(&self, a: &Tracklet, b: &Tracklet) -> bool {
        if temporal_overlap(a, b) {
            return false;
        }
        self.blocks_segments(&[Segment::of(a)], &[Segment::of(b)])
    }

    /// Checks every junction the union of two disjoint segment lists would
    /// create: consecutive segments (in time) that come from different sides.
    fn blocks_segments(&self, a: &[Segment], b: &[Segment]) -> bool {
        let mut all: Vec<(&Segment, bool)> = a
            .iter()
            .map(|s| (s, false))
            .chain(b.iter().map(|s| (s, true)))
            .collect();
        all.sort_by_key(|(s, _)| s.first);
        all.windows(2).any(|w| {
            let ((earlier, side_e), (later, side_l)) = (w[0], w[1]);
            side_e != side_l && self.too_far(earlier.exit, later.entry)
        })
    }

    fn too_far(&self, exit: (f64, f64), entry: (f64, f64)) -> bool {
        (exit.0 - entry.0).abs() > self.theta_hor || (exit.1 - entry.1).abs() > self.theta_ver
    }
}

/// Frame interval and endpoints of one input tracklet.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    first: u32,
    last: u32,
    entry: (f64, f64),
    exit: (f64, f64),
}

impl Segment {
    fn of(t: &Tracklet) -> Self {
        Self {
            first: t.first_frame(),
            last: t.last_frame(),
            entry: t.entry_point(),
            exit: t.exit_point(),
        }
    }

    fn overlaps(&self, other: &Segment) -> bool {
        self.first <= other.last && other.first <= self.last
    }
}

fn feature_distance(a: &Tracklet, b: &Tracklet) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let pairs = (a.len() * b.len()) as f64;
    let raw = 1.0 - dot(a.feature_sum(), b.feature_sum()) / pairs;
    debug_assert!(raw >= -CLAMP_SLACK, "distance {raw} below zero");
    Ok(raw.clamp(0.0, FORBIDDEN))
}

/// Mean pairwise cosine distance between the embeddings of `a` and `b`, or 1 if
/// their frame intervals overlap. Anti-aligned pairs are clamped to 1.
pub fn tracklet_distance(a: &Tracklet, b: &Tracklet) -> Result<f64> {
    let d = feature_distance(a, b)?;
    Ok(if temporal_overlap(a, b) { FORBIDDEN } else { d })
}

pub fn build_matrix(ts: &TrackSet) -> Result<DistanceMatrix> {
    let tracklets = ts.tracklets();
    let n = tracklets.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| tracklet_distance(&tracklets[i], &tracklets[j]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut m = DistanceMatrix::filled(n, 0.0);
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, d) in row.into_iter().enumerate() {
            m.set(i, i + 1 + offset, d);
        }
    }
    Ok(m)
}

/// Pins to 1 every entry whose pair fails the spatial gate for `beta`.
pub fn apply_spatial_gate(matrix: &DistanceMatrix, ts: &TrackSet, beta: f64) -> DistanceMatrix {
    let gate = SpatialGate::new(ts, beta);
    let tracklets = ts.tracklets();
    let mut out = matrix.clone();
    for i in 0..tracklets.len() {
        for j in i + 1..tracklets.len() {
            if gate.blocks(&tracklets[i], &tracklets[j]) {
                out.set(i, j, FORBIDDEN);
            }
        }
    }
    out
}

/// One merge performed by the connector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeStep {
    pub kept: u32,
    pub absorbed: u32,
    pub distance: f64,
}

/// Greedy agglomerative merging over a prepared (and possibly gated) matrix.
/// Returns the merged set and the merges in the order they happened.
pub fn merge_with_matrix(
    ts: &TrackSet,
    matrix: DistanceMatrix,
    cfg: &RefineConfig,
) -> Result<(TrackSet, Vec<MergeStep>)> {
    let gate = cfg
        .enable_spatial()
        .then(|| SpatialGate::new(ts, cfg.spatial_factor()));
    let mut slots: Vec<Option<Cluster>> = ts
        .tracklets()
        .iter()
        .map(|t| {
            Some(Cluster {
                segments: vec![Segment::of(t)],
                tracklet: t.clone(),
            })
        })
        .collect();
    let mut matrix = matrix;
    let n = slots.len();
    let threshold = cfg.merge_threshold().min(FORBIDDEN);
    let mut steps = Vec::new();

    loop {
        // slots stay in ascending id order, so index order is id order
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..n).filter(|&i| slots[i].is_some()) {
            for j in (i + 1..n).filter(|&j| slots[j].is_some()) {
                let d = matrix.get(i, j);
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let Some((i, j, d)) = best else { break };
        if d >= threshold {
            break;
        }
        let a = slots[i].take().unwrap();
        let b = slots[j].take().unwrap();
        steps.push(MergeStep {
            kept: a.tracklet.id(),
            absorbed: b.tracklet.id(),
            distance: d,
        });
        let mut segments = a.segments;
        segments.extend(b.segments);
        slots[i] = Some(Cluster {
            tracklet: Tracklet::merge(a.tracklet, b.tracklet)?,
            segments,
        });

        let merged = slots[i].as_ref().unwrap();
        for k in (0..n).filter(|&k| k != i) {
            if let Some(other) = &slots[k] {
                matrix.set(i, k, merged.distance(other, gate.as_ref())?);
            }
        }
    }

    let tracklets = slots.into_iter().flatten().map(|c| c.tracklet).collect();
    Ok((ts.with_tracklets(tracklets)?, steps))
}

/// A possibly merged tracklet plus the input tracklets it came from.
struct Cluster {
    tracklet: Tracklet,
    segments: Vec<Segment>,
}

impl Cluster {
    fn distance(&self, other: &Cluster, gate: Option<&SpatialGate>) -> Result<f64> {
        let d = feature_distance(&self.tracklet, &other.tracklet)?;
        let overlap = self
            .segments
            .iter()
            .any(|s| other.segments.iter().any(|o| s.overlaps(o)));
        if overlap || gate.is_some_and(|g| g.blocks_segments(&self.segments, &other.segments)) {
            return Ok(FORBIDDEN);
        }
        Ok(d)
    }
}

/// Builds the matrix for `ts`, gates it when enabled, and merges.
pub fn hierarchical_merge(ts: &TrackSet, cfg: &RefineConfig) -> Result<TrackSet> {
    connect_logged(ts, cfg).map(|(out, _)| out)
}

pub fn connect_logged(ts: &TrackSet, cfg: &RefineConfig) -> Result<(TrackSet, Vec<MergeStep>)> {
    if ts.len() <= 1 {
        return Ok((ts.clone(), Vec::new()));
    }
    let mut matrix = build_matrix(ts)?;
    if cfg.enable_spatial() {
        matrix = apply_spatial_gate(&matrix, ts, cfg.spatial_factor());
    }
    merge_with_matrix(ts, matrix, cfg)
}

pub fn connect(ts: &TrackSet, cfg: &RefineConfig) -> Result<TrackSet> {
    hierarchical_merge(ts, cfg)
}
