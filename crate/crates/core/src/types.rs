//! Domain types shared by every stage: boxes, embeddings, tracklets and the
//! per-sequence track set, plus the vector primitives the stages are built on.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Norms below this are treated as zero at ingestion.
pub const ZERO_NORM: f64 = 1e-12;

/// Axis-aligned box in MOT convention (top-left corner plus size, pixels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl BoundingBox {
    /// Returns `None` unless both `width` and `height` are strictly positive and
    /// every field is finite.
    pub fn new(left: f64, top: f64, width: f64, height: f64) -> Option<Self> {
        let finite = left.is_finite() && top.is_finite() && width.is_finite() && height.is_finite();
        (finite && width > 0.0 && height > 0.0).then_some(Self {
            left,
            top,
            width,
            height,
        })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn bottom(&self) -> f64 {
        self.top + self.height
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn center(&self) -> (f64, f64) {
        (self.left + self.width / 2.0, self.top + self.height / 2.0)
    }
}

/// One detection of a track on one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxObservation {
    pub frame: u32,
    pub bbox: BoundingBox,
    /// Carried through untouched; refinement never filters on it.
    pub confidence: f64,
}

/// Appearance feature of one detection.
///
/// Keeps the vector exactly as ingested (`raw`, single precision, what gets
/// written back out) next to its L2-normalized double-precision copy (`unit`),
/// which is what every distance computation reads.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    raw: Vec<f32>,
    unit: Vec<f64>,
}

impl Embedding {
    pub fn raw(&self) -> &[f32] {
        &self.raw
    }

    pub fn unit(&self) -> &[f64] {
        &self.unit
    }

    pub fn dim(&self) -> usize {
        self.unit.len()
    }
}

/// Normalizes `values` to unit L2 norm.
pub fn normalize_embedding(values: &[f32]) -> Result<Embedding> {
    let norm = values
        .iter()
        .map(|&v| f64::from(v) * f64::from(v))
        .sum::<f64>()
        .sqrt();
    if values.is_empty() || !norm.is_finite() || norm < ZERO_NORM {
        return Err(Error::ZeroVector);
    }
    Ok(Embedding {
        raw: values.to_vec(),
        unit: values.iter().map(|&v| f64::from(v) / norm).collect(),
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `1 - a·b` for unit embeddings.
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(1.0 - dot(a.unit(), b.unit()))
}

/// All observations of one track id, in strictly increasing frame order, with
/// one embedding per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    id: u32,
    observations: Vec<BoxObservation>,
    embeddings: Vec<Embedding>,
    feature_sum: Vec<f64>,
}

impl Tracklet {
    /// Builds a tracklet from observation/embedding pairs in any order.
    pub fn new(id: u32, mut pairs: Vec<(BoxObservation, Embedding)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyTracklet(id));
        }
        pairs.sort_by_key(|(obs, _)| obs.frame);
        for w in pairs.windows(2) {
            if w[0].0.frame == w[1].0.frame {
                return Err(Error::DuplicateFramePerId {
                    frame: w[0].0.frame,
                    id,
                });
            }
        }
        let dim = pairs[0].1.dim();
        if let Some((_, e)) = pairs.iter().find(|(_, e)| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: e.dim(),
            });
        }
        let (observations, embeddings): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let feature_sum = sum_units(&embeddings, dim);
        Ok(Self {
            id,
            observations,
            embeddings,
            feature_sum,
        })
    }

    /// Builds a tracklet from parallel observation and embedding lists.
    pub fn from_parts(
        id: u32,
        observations: Vec<BoxObservation>,
        embeddings: Vec<Embedding>,
    ) -> Result<Self> {
        if observations.len() != embeddings.len() {
            return Err(Error::LengthMismatch {
                observations: observations.len(),
                embeddings: embeddings.len(),
            });
        }
        Self::new(id, observations.into_iter().zip(embeddings).collect())
    }

    /// Fuses two tracklets with disjoint frames. The result carries the smaller
    /// id and the sum of both feature sums.
    pub fn merge(a: Tracklet, b: Tracklet) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                left: a.dim(),
                right: b.dim(),
            });
        }
        let id = a.id.min(b.id);
        let feature_sum: Vec<f64> = a
            .feature_sum
            .iter()
            .zip(&b.feature_sum)
            .map(|(x, y)| x + y)
            .collect();
        let len = a.len() + b.len();
        let mut observations = Vec::with_capacity(len);
        let mut embeddings = Vec::with_capacity(len);
        let mut left = a.observations.into_iter().zip(a.embeddings).peekable();
        let mut right = b.observations.into_iter().zip(b.embeddings).peekable();
        loop {
            let take_left = match (left.peek(), right.peek()) {
                (Some(l), Some(r)) if l.0.frame == r.0.frame => {
                    return Err(Error::MergeConflict(a.id.min(b.id), a.id.max(b.id)));
                }
                (Some(l), Some(r)) => l.0.frame < r.0.frame,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            let (obs, emb) = if take_left { left.next() } else { right.next() }.unwrap();
            observations.push(obs);
            embeddings.push(emb);
        }
        Ok(Self {
            id,
            observations,
            embeddings,
            feature_sum,
        })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    /// Same contents under a different id.
    pub fn relabeled(mut self, id: u32) -> Self {
        self.id = id;
        self
    }

    pub fn observations(&self) -> &[BoxObservation] {
        &self.observations
    }

    pub fn embeddings(&self) -> &[Embedding] {
        &self.embeddings
    }

    pub fn feature_sum(&self) -> &[f64] {
        &self.feature_sum
    }

    /// Sum of unit embeddings computed from scratch, for checking the cache.
    pub fn recomputed_feature_sum(&self) -> Vec<f64> {
        sum_units(&self.embeddings, self.dim())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_sum.len()
    }

    pub fn first_frame(&self) -> u32 {
        self.observations[0].frame
    }

    pub fn last_frame(&self) -> u32 {
        self.observations[self.len() - 1].frame
    }

    pub fn frames(&self) -> impl Iterator<Item = u32> + '_ {
        self.observations.iter().map(|o| o.frame)
    }

    /// Center of the first box.
    pub fn entry_point(&self) -> (f64, f64) {
        self.observations[0].bbox.center()
    }

    /// Center of the last box.
    pub fn exit_point(&self) -> (f64, f64) {
        self.observations[self.len() - 1].bbox.center()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&BoxObservation, &Embedding)> {
        self.observations.iter().zip(&self.embeddings)
    }

    pub fn into_pairs(self) -> impl Iterator<Item = (BoxObservation, Embedding)> {
        self.observations.into_iter().zip(self.embeddings)
    }
}

fn sum_units(embeddings: &[Embedding], dim: usize) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    for e in embeddings {
        for (s, v) in sum.iter_mut().zip(e.unit()) {
            *s += v;
        }
    }
    sum
}

/// Whether the `[first, last]` frame intervals of two tracklets intersect.
pub fn temporal_overlap(a: &Tracklet, b: &Tracklet) -> bool {
    a.first_frame() <= b.last_frame() && b.first_frame() <= a.last_frame()
}

/// `feature_sum / N`, not re-normalized.
pub fn mean_feature(t: &Tracklet) -> Vec<f64> {
    let n = t.len() as f64;
    t.feature_sum().iter().map(|s| s / n).collect()
}

/// Every tracklet of one video sequence, ordered by id.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSet {
    sequence_name: String,
    tracklets: Vec<Tracklet>,
    frame_count: u32,
    extent_hor: f64,
    extent_ver: f64,
}

impl TrackSet {
    pub fn new(sequence_name: impl Into<String>, mut tracklets: Vec<Tracklet>) -> Result<Self> {
        tracklets.sort_by_key(Tracklet::id);
        for w in tracklets.windows(2) {
            if w[0].id() == w[1].id() {
                return Err(Error::DuplicateId(w[0].id()));
            }
        }
        if let Some(first) = tracklets.first() {
            let dim = first.dim();
            if let Some(t) = tracklets.iter().find(|t| t.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: t.dim(),
                });
            }
        }
        let frame_count = tracklets
            .iter()
            .map(Tracklet::last_frame)
            .max()
            .unwrap_or(0);
        let (extent_hor, extent_ver) = center_extents(&tracklets);
        Ok(Self {
            sequence_name: sequence_name.into(),
            tracklets,
            frame_count,
            extent_hor,
            extent_ver,
        })
    }

    pub fn empty(sequence_name: impl Into<String>) -> Self {
        Self {
            sequence_name: sequence_name.into(),
            tracklets: Vec::new(),
            frame_count: 0,
            extent_hor: 0.0,
            extent_ver: 0.0,
        }
    }

    /// Same sequence, new tracklets; extents are recomputed.
    pub fn with_tracklets(&self, tracklets: Vec<Tracklet>) -> Result<Self> {
        Self::new(self.sequence_name.clone(), tracklets)
    }

    pub fn sequence_name(&self) -> &str {
        &self.sequence_name
    }

    pub fn tracklets(&self) -> &[Tracklet] {
        &self.tracklets
    }

    pub fn into_tracklets(self) -> Vec<Tracklet> {
        self.tracklets
    }

    pub fn get(&self, id: u32) -> Option<&Tracklet> {
        self.tracklets
            .binary_search_by_key(&id, Tracklet::id)
            .ok()
            .map(|i| &self.tracklets[i])
    }

    pub fn len(&self) -> usize {
        self.tracklets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracklets.is_empty()
    }

    /// Highest frame index present, 0 when empty.
    pub fn frame_count(&self) -> u32 {
        self.frame_count
    }

    /// Horizontal spread of all box centers.
    pub fn extent_hor(&self) -> f64 {
        self.extent_hor
    }

    /// Vertical spread of all box centers.
    pub fn extent_ver(&self) -> f64 {
        self.extent_ver
    }

    pub fn observation_count(&self) -> usize {
        self.tracklets.iter().map(Tracklet::len).sum()
    }

    pub fn max_id(&self) -> Option<u32> {
        self.tracklets.last().map(Tracklet::id)
    }

    pub fn ids(&self) -> BTreeSet<u32> {
        self.tracklets.iter().map(Tracklet::id).collect()
    }

    /// `(frame, id, observation, embedding)` for every detection, sorted by
    /// frame then id.
    pub fn rows(&self) -> Vec<(u32, &BoxObservation, &Embedding)> {
        let mut rows: Vec<_> = self
            .tracklets
            .iter()
            .flat_map(|t| t.pairs().map(move |(o, e)| (t.id(), o, e)))
            .collect();
        rows.sort_by_key(|(id, o, _)| (o.frame, *id));
        rows
    }
}

fn center_extents(tracklets: &[Tracklet]) -> (f64, f64) {
    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for obs in tracklets.iter().flat_map(Tracklet::observations) {
        let (x, y) = obs.bbox.center();
        min = (min.0.min(x), min.1.min(y));
        max = (max.0.max(x), max.1.max(y));
    }
    if min.0 > max.0 {
        return (0.0, 0.0);
    }
    (max.0 - min.0, max.1 - min.1)
}

/// Hyperparameters of both refinement stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    min_samples: usize,
    eps: f64,
    max_clusters: usize,
    merge_threshold: f64,
    spatial_factor: f64,
    enable_split: bool,
    enable_spatial: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            min_samples: 5,
            eps: 0.6,
            max_clusters: 3,
            merge_threshold: 0.4,
            spatial_factor: 1.0,
            enable_split: true,
            enable_spatial: true,
        }
    }
}

impl RefineConfig {
    pub fn new(
        min_samples: usize,
        eps: f64,
        max_clusters: usize,
        merge_threshold: f64,
        spatial_factor: f64,
    ) -> Result<Self> {
        if min_samples < 1 {
            return Err(Error::InvalidConfig(
                "min_samples must be at least 1".into(),
            ));
        }
        if !(0.0..=2.0).contains(&eps) {
            return Err(Error::InvalidConfig(format!("eps {eps} outside [0, 2]")));
        }
        if max_clusters < 1 {
            return Err(Error::InvalidConfig(
                "max_clusters must be at least 1".into(),
            ));
        }
        if !(0.0..=2.0).contains(&merge_threshold) {
            return Err(Error::InvalidConfig(format!(
                "merge threshold {merge_threshold} outside [0, 2]"
            )));
        }
        if !(spatial_factor > 0.0 && spatial_factor <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "spatial factor {spatial_factor} outside (0, 1]"
            )));
        }
        Ok(Self {
            min_samples,
            eps,
            max_clusters,
            merge_threshold,
            spatial_factor,
            ..Self::default()
        })
    }

    pub fn with_split(mut self, enabled: bool) -> Self {
        self.enable_split = enabled;
        self
    }

    pub fn with_spatial(mut self, enabled: bool) -> Self {
        self.enable_spatial = enabled;
        self
    }

    /// Minimum neighborhood size (including the point) for a core point.
    pub fn min_samples(&self) -> usize {
        self.min_samples
    }

    /// Neighborhood radius in cosine distance.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Upper bound on fragments produced from one tracklet.
    pub fn max_clusters(&self) -> usize {
        self.max_clusters
    }

    /// Pairs are merged while their distance is strictly below this.
    pub fn merge_threshold(&self) -> f64 {
        self.merge_threshold
    }

    /// Fraction of the scene extent allowed between exit and entry points.
    pub fn spatial_factor(&self) -> f64 {
        self.spatial_factor
    }

    pub fn enable_split(&self) -> bool {
        self.enable_split
    }

    pub fn enable_spatial(&self) -> bool {
        self.enable_spatial
    }
}
