//! Synthetic ground truth and controlled corruption.
//!
//! Each identity gets a unit prototype vector; every detection's embedding is
//! the prototype rotated by a bounded random angle inside a random 2-plane.
//! Two samples of one identity are therefore at most `2·noise` apart in angle,
//! and samples of different identities at least `min_angle - 2·noise`, which
//! gives provable cosine-distance bounds for choosing thresholds in tests.
//!
//! Corruption mirrors the two tracker failure modes: cut-offs (one identity
//! spread over several ids) and mix-ups (one id covering several identities).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::types::{
    normalize_embedding, BoundingBox, BoxObservation, Embedding, TrackSet, Tracklet,
};

const PROTOTYPE_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams {
    pub num_identities: usize,
    pub frames: u32,
    pub embed_dim: usize,
    /// Radians.
    pub noise_angle_max: f64,
    /// Radians.
    pub min_prototype_angle: f64,
    pub field_width: f64,
    pub field_height: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            num_identities: 10,
            frames: 200,
            embed_dim: 32,
            noise_angle_max: 10f64.to_radians(),
            min_prototype_angle: 90f64.to_radians(),
            field_width: 1920.0,
            field_height: 1080.0,
            rng_seed: 7,
        }
    }
}

impl ScenarioParams {
    /// Whether any two same-identity samples are closer than any two
    /// different-identity samples.
    pub fn is_separable(&self) -> bool {
        self.min_prototype_angle > 2.0 * self.noise_angle_max
    }

    /// Cosine distance ceiling between two samples of one identity.
    pub fn intra_distance_bound(&self) -> f64 {
        1.0 - (2.0 * self.noise_angle_max).min(std::f64::consts::PI).cos()
    }

    /// Cosine distance floor between samples of different identities.
    pub fn inter_distance_bound(&self) -> f64 {
        1.0 - (self.min_prototype_angle - 2.0 * self.noise_angle_max)
            .max(0.0)
            .cos()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.num_identities == 0 {
            return bad("num_identities must be at least 1");
        }
        if self.frames == 0 {
            return bad("frames must be at least 1");
        }
        if self.embed_dim < 2 {
            return bad("embed_dim must be at least 2");
        }
        let angle = 0.0..=std::f64::consts::PI;
        if !angle.contains(&self.noise_angle_max) || !angle.contains(&self.min_prototype_angle) {
            return bad("angles must lie in [0, pi]");
        }
        if !(self.field_width > 0.0 && self.field_height > 0.0) {
            return bad("field size must be positive");
        }
        Ok(())
    }
}

fn gaussian_vec(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn unit(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-9 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Some(v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the components of `v` along each (unit) vector in `basis`.
fn orthogonalize(mut v: Vec<f64>, basis: &[Vec<f64>]) -> Vec<f64> {
    for b in basis {
        let d = dot(&v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
    }
    v
}

/// Unit prototypes with pairwise angle at least `min_angle`. Up to
/// `dim` prototypes at no more than 90° come from a random orthonormal frame;
/// anything else falls back to bounded rejection sampling.
fn prototypes(
    rng: &mut impl Rng,
    count: usize,
    dim: usize,
    min_angle: f64,
) -> Result<Vec<Vec<f64>>> {
    let infeasible = Error::InfeasibleGeometry { requested: count };
    let min_cos = min_angle.cos();
    let orthonormal = count <= dim && min_angle <= std::f64::consts::FRAC_PI_2;
    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(count);
    while chosen.len() < count {
        let mut placed = false;
        for _ in 0..PROTOTYPE_ATTEMPTS {
            let mut v = gaussian_vec(rng, dim);
            if orthonormal {
                v = orthogonalize(orthogonalize(v, &chosen), &chosen);
            }
            let Some(v) = unit(v) else { continue };
            if chosen.iter().all(|c| dot(c, &v) <= min_cos + 1e-12) {
                chosen.push(v);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(infeasible);
        }
    }
    Ok(chosen)
}

/// `prototype` rotated by a uniform angle in `[0, max_angle]` towards a random
/// direction orthogonal to it.
fn perturb(rng: &mut impl Rng, prototype: &[f64], max_angle: f64) -> Vec<f64> {
    if max_angle <= 0.0 {
        return prototype.to_vec();
    }
    let axis = loop {
        let v = orthogonalize(gaussian_vec(rng, prototype.len()), &[prototype.to_vec()]);
        if let Some(u) = unit(v) {
            break u;
        }
    };
    let theta = rng.random_range(0.0..=max_angle);
    let (s, c) = theta.sin_cos();
    prototype
        .iter()
        .zip(&axis)
        .map(|(p, a)| c * p + s * a)
        .collect()
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn as_embedding(v: &[f64]) -> Embedding {
    let raw: Vec<f32> = v.iter().map(|&x| x as f32).collect();
    normalize_embedding(&raw).expect("unit vector survives f32 rounding")
}

/// Ground truth: one tracklet per identity (ids `1..=n`) covering frames
/// `1..=frames`, boxes on a damped random walk inside the field.
pub fn generate(params: &ScenarioParams) -> Result<TrackSet> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let protos = prototypes(
        &mut rng,
        params.num_identities,
        params.embed_dim,
        params.min_prototype_angle,
    )?;
    let (fw, fh) = (params.field_width, params.field_height);
    let mut tracklets = Vec::with_capacity(protos.len());
    for (i, proto) in protos.iter().enumerate() {
        let w = (fw * rng.random_range(0.02..0.05)).max(1.0);
        let h = (fh * rng.random_range(0.06..0.12)).max(1.0);
        let mut x = rng.random_range(0.0..=(fw - w).max(0.0));
        let mut y = rng.random_range(0.0..=(fh - h).max(0.0));
        let mut vx = rng.random_range(-3.0..3.0);
        let mut vy = rng.random_range(-2.0..2.0);
        let mut pairs = Vec::with_capacity(params.frames as usize);
        for frame in 1..=params.frames {
            let bbox = BoundingBox::new(round2(x), round2(y), round2(w), round2(h))
                .expect("generated box has positive size");
            let obs = BoxObservation {
                frame,
                bbox,
                confidence: 1.0,
            };
            pairs.push((
                obs,
                as_embedding(&perturb(&mut rng, proto, params.noise_angle_max)),
            ));
            vx = 0.9 * vx + rng.random_range(-1.0..1.0);
            vy = 0.9 * vy + rng.random_range(-1.0..1.0);
            x = (x + vx).clamp(0.0, (fw - w).max(0.0));
            y = (y + vy).clamp(0.0, (fh - h).max(0.0));
        }
        tracklets.push(Tracklet::new(i as u32 + 1, pairs)?);
    }
    TrackSet::new(format!("synth-{}", params.rng_seed), tracklets)
}

/// Ground-truth identity of every observation, keyed by `(frame, track id)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance {
    origin: BTreeMap<(u32, u32), u32>,
}

impl Provenance {
    /// Every observation of `ts` belongs to the identity of its own track.
    pub fn identity(ts: &TrackSet) -> Self {
        let origin = ts
            .tracklets()
            .iter()
            .flat_map(|t| t.frames().map(move |f| ((f, t.id()), t.id())))
            .collect();
        Self { origin }
    }

    /// From `(frame, track id, gt id)` triples.
    pub fn from_triples(triples: impl IntoIterator<Item = (u32, u32, u32)>) -> Self {
        let origin = triples
            .into_iter()
            .map(|(frame, id, gt)| ((frame, id), gt))
            .collect();
        Self { origin }
    }

    pub fn gt_of(&self, frame: u32, id: u32) -> Option<u32> {
        self.origin.get(&(frame, id)).copied()
    }

    /// Distinct `(track id, gt id)` pairs, sorted.
    pub fn pairs(&self) -> Vec<(u32, u32)> {
        let mut pairs: Vec<_> = self.origin.iter().map(|(&(_, id), &gt)| (id, gt)).collect();
        pairs.sort_unstable();
        pairs.dedup();
        pairs
    }

    /// Sidecar text: one `track_id:gt_id` line per distinct pair.
    pub fn to_sidecar(&self) -> String {
        self.pairs()
            .into_iter()
            .map(|(id, gt)| format!("{id}:{gt}\n"))
            .collect()
    }

    /// Transfers provenance onto a relabeled set whose observations are the
    /// same boxes on the same frames. Observations are matched by
    /// `(frame, old id)` through `relabel`.
    fn remap(&self, relabel: &BTreeMap<(u32, u32), u32>) -> Self {
        let origin = relabel
            .iter()
            .map(|(&(frame, old), &new)| ((frame, new), self.origin[&(frame, old)]))
            .collect();
        Self { origin }
    }

    /// Ground-truth ids covered by each track of `ts`.
    pub fn purity(&self, ts: &TrackSet) -> BTreeMap<u32, Vec<u32>> {
        ts.tracklets()
            .iter()
            .map(|t| {
                let mut gts: Vec<u32> = t.frames().filter_map(|f| self.gt_of(f, t.id())).collect();
                gts.sort_unstable();
                gts.dedup();
                (t.id(), gts)
            })
            .collect()
    }
}

/// Cuts every tracklet at each inter-frame gap with probability `cut_rate`.
/// The first piece keeps the original id; later pieces get fresh ids above the
/// current maximum.
pub fn inject_cutoff(ts: &TrackSet, cut_rate: f64, seed: u64) -> Result<(TrackSet, Provenance)> {
    inject_cutoff_from(ts, &Provenance::identity(ts), cut_rate, seed)
}

/// [`inject_cutoff`] on an already corrupted set, carrying its provenance.
pub fn inject_cutoff_from(
    ts: &TrackSet,
    provenance: &Provenance,
    cut_rate: f64,
    seed: u64,
) -> Result<(TrackSet, Provenance)> {
    if !(0.0..=1.0).contains(&cut_rate) {
        return Err(Error::InvalidConfig(format!(
            "cut rate {cut_rate} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut next = ts.max_id().unwrap_or(0);
    let mut relabel = BTreeMap::new();
    let mut out = Vec::new();
    for t in ts.tracklets() {
        let mut pieces: Vec<Vec<(BoxObservation, Embedding)>> = vec![Vec::new()];
        for (k, (o, e)) in t.pairs().enumerate() {
            if k > 0 && rng.random_bool(cut_rate) {
                pieces.push(Vec::new());
            }
            pieces.last_mut().unwrap().push((*o, e.clone()));
        }
        for (k, piece) in pieces.into_iter().enumerate() {
            let id = if k == 0 {
                t.id()
            } else {
                next += 1;
                next
            };
            for (o, _) in &piece {
                relabel.insert((o.frame, t.id()), id);
            }
            out.push(Tracklet::new(id, piece)?);
        }
    }
    Ok((ts.with_tracklets(out)?, provenance.remap(&relabel)))
}

/// A forced ID swap: from `frame` onward, tracks `a` and `b` exchange their
/// observations. Both must have an observation on `frame`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Swap {
    pub frame: u32,
    pub a: u32,
    pub b: u32,
}

/// Applies swaps in the given order.
pub fn apply_swaps(ts: &TrackSet, swaps: &[Swap]) -> Result<(TrackSet, Provenance)> {
    let provenance = Provenance::identity(ts);
    let mut tracks: BTreeMap<u32, Vec<(BoxObservation, Embedding)>> = ts
        .tracklets()
        .iter()
        .map(|t| (t.id(), t.pairs().map(|(o, e)| (*o, e.clone())).collect()))
        .collect();
    // (frame, current id) -> original id
    let mut origin: BTreeMap<(u32, u32), u32> = ts
        .tracklets()
        .iter()
        .flat_map(|t| t.frames().map(move |f| ((f, t.id()), t.id())))
        .collect();
    for s in swaps {
        let alive = |id: u32| {
            tracks
                .get(&id)
                .is_some_and(|v| v.iter().any(|(o, _)| o.frame == s.frame))
        };
        if s.a == s.b || !alive(s.a) || !alive(s.b) {
            return Err(Error::InvalidConfig(format!(
                "swap of {} and {} at frame {} needs both alive",
                s.a, s.b, s.frame
            )));
        }
        let mut ta = tracks.remove(&s.a).unwrap();
        let mut tb = tracks.remove(&s.b).unwrap();
        let cut_a = ta.partition_point(|(o, _)| o.frame < s.frame);
        let cut_b = tb.partition_point(|(o, _)| o.frame < s.frame);
        let tail_a = ta.split_off(cut_a);
        let tail_b = tb.split_off(cut_b);
        for (o, _) in &tail_a {
            let src = origin.remove(&(o.frame, s.a)).unwrap();
            origin.insert((o.frame, u32::MAX), src);
        }
        for (o, _) in &tail_b {
            let src = origin.remove(&(o.frame, s.b)).unwrap();
            origin.insert((o.frame, s.a), src);
        }
        for (o, _) in &tail_a {
            let src = origin.remove(&(o.frame, u32::MAX)).unwrap();
            origin.insert((o.frame, s.b), src);
        }
        ta.extend(tail_b);
        tb.extend(tail_a);
        tracks.insert(s.a, ta);
        tracks.insert(s.b, tb);
    }
    let tracklets = tracks
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(id, v)| Tracklet::new(id, v))
        .collect::<Result<Vec<_>>>()?;
    let origin = origin
        .into_iter()
        .map(|(key, src)| (key, provenance.origin[&(key.0, src)]))
        .collect();
    Ok((ts.with_tracklets(tracklets)?, Provenance { origin }))
}

/// At each frame where at least two tracks are alive, with probability
/// `swap_rate` swaps two random alive tracks from that frame onward.
pub fn inject_mixup(ts: &TrackSet, swap_rate: f64, seed: u64) -> Result<(TrackSet, Provenance)> {
    if !(0.0..=1.0).contains(&swap_rate) {
        return Err(Error::InvalidConfig(format!(
            "swap rate {swap_rate} outside [0, 1]"
        )));
    }
    let mut alive: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for t in ts.tracklets() {
        for f in t.frames() {
            alive.entry(f).or_default().push(t.id());
        }
    }
    alive.retain(|_, ids| ids.len() >= 2);
    if alive.is_empty() {
        return Err(Error::NoEligiblePair);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swaps = Vec::new();
    // a swap exchanges whole tails, so the set of ids alive on a frame is unchanged
    for (&frame, ids) in &alive {
        if rng.random_bool(swap_rate) {
            let i = rng.random_range(0..ids.len());
            let mut j = rng.random_range(0..ids.len() - 1);
            if j >= i {
                j += 1;
            }
            swaps.push(Swap {
                frame,
                a: ids[i],
                b: ids[j],
            });
        }
    }
    apply_swaps(ts, &swaps)
}
