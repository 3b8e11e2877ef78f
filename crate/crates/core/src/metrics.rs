//! IDF1, ID switches and MOTA over per-frame IoU matching.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;

use crate::assignment;
use crate::types::{BoundingBox, TrackSet};

pub const DEFAULT_IOU_MIN: f64 = 0.5;

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let w = (a.right().min(b.right()) - a.left().max(b.left())).max(0.0);
    let h = (a.bottom().min(b.bottom()) - a.top().max(b.top())).max(0.0);
    let inter = w * h;
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

/// One-to-one matching of one frame's ground truth against predictions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameMatch {
    /// `(gt index, pred index, iou)`
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

/// Matching over a precomputed `gt × pred` IoU matrix: as many pairs as
/// possible with IoU at least `iou_min`, and among those the largest total IoU.
pub fn match_ious(ious: &[Vec<f64>], num_pred: usize, iou_min: f64) -> FrameMatch {
    // any valid pair outweighs every possible IoU total, so cardinality wins first
    let bonus = ious.len().min(num_pred) as f64 + 1.0;
    let weights: Vec<Vec<f64>> = ious
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| if v >= iou_min { bonus + v } else { 0.0 })
                .collect()
        })
        .collect();
    let pairs: Vec<_> = assignment::maximize(&weights, num_pred)
        .into_iter()
        .filter(|&(g, p)| ious[g][p] >= iou_min)
        .map(|(g, p)| (g, p, ious[g][p]))
        .collect();
    let mut gt_used = vec![false; ious.len()];
    let mut pred_used = vec![false; num_pred];
    for &(g, p, _) in &pairs {
        gt_used[g] = true;
        pred_used[p] = true;
    }
    FrameMatch {
        pairs,
        unmatched_gt: (0..ious.len()).filter(|&g| !gt_used[g]).collect(),
        unmatched_pred: (0..num_pred).filter(|&p| !pred_used[p]).collect(),
    }
}

pub fn match_frame(gt: &[BoundingBox], pred: &[BoundingBox], iou_min: f64) -> FrameMatch {
    let ious: Vec<Vec<f64>> = gt
        .iter()
        .map(|g| pred.iter().map(|p| iou(g, p)).collect())
        .collect();
    match_ious(&ious, pred.len(), iou_min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub idf1: f64,
    pub id_switches: usize,
    pub mota: f64,
    pub idtp: usize,
    pub idfp: usize,
    pub idfn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub gt_count: usize,
    pub pred_count: usize,
}

impl EvalReport {
    /// `key=value` lines for scripting.
    pub fn to_machine(&self) -> String {
        format!(
            "idf1={:.6}\nid_switches={}\nmota={:.6}\nidtp={}\nidfp={}\nidfn={}\nfp={}\nfn={}\ngt_count={}\npred_count={}\n",
            self.idf1,
            self.id_switches,
            self.mota,
            self.idtp,
            self.idfp,
            self.idfn,
            self.fp,
            self.fn_,
            self.gt_count,
            self.pred_count
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IDF1   {:>8.2}%", 100.0 * self.idf1)?;
        writeln!(f, "MOTA   {:>8.2}%", 100.0 * self.mota)?;
        writeln!(f, "IDs    {:>8}", self.id_switches)?;
        writeln!(
            f,
            "IDTP {} / IDFP {} / IDFN {}",
            self.idtp, self.idfp, self.idfn
        )?;
        write!(
            f,
            "FP {} / FN {} / GT {} / pred {}",
            self.fp, self.fn_, self.gt_count, self.pred_count
        )
    }
}

type FrameBoxes = Vec<(u32, BoundingBox)>;

fn by_frame(ts: &TrackSet) -> BTreeMap<u32, FrameBoxes> {
    let mut frames: BTreeMap<u32, FrameBoxes> = BTreeMap::new();
    for t in ts.tracklets() {
        for o in t.observations() {
            frames.entry(o.frame).or_default().push((t.id(), o.bbox));
        }
    }
    frames
}

struct FrameResult {
    frame_match: FrameMatch,
    gt_ids: Vec<u32>,
    pred_ids: Vec<u32>,
    /// `(gt id, pred id)` for every pair above the IoU floor
    overlaps: Vec<(u32, u32)>,
}

pub fn evaluate(gt: &TrackSet, pred: &TrackSet, iou_min: f64) -> EvalReport {
    let gt_frames = by_frame(gt);
    let pred_frames = by_frame(pred);
    let empty = Vec::new();
    let mut frames: Vec<u32> = gt_frames
        .keys()
        .chain(pred_frames.keys())
        .copied()
        .collect();
    frames.sort_unstable();
    frames.dedup();

    let results: Vec<FrameResult> = frames
        .par_iter()
        .map(|f| {
            let g = gt_frames.get(f).unwrap_or(&empty);
            let p = pred_frames.get(f).unwrap_or(&empty);
            let ious: Vec<Vec<f64>> = g
                .iter()
                .map(|(_, gb)| p.iter().map(|(_, pb)| iou(gb, pb)).collect())
                .collect();
            let mut overlaps = Vec::new();
            for (gi, row) in ious.iter().enumerate() {
                for (pi, &v) in row.iter().enumerate() {
                    if v >= iou_min {
                        overlaps.push((g[gi].0, p[pi].0));
                    }
                }
            }
            FrameResult {
                frame_match: match_ious(&ious, p.len(), iou_min),
                gt_ids: g.iter().map(|x| x.0).collect(),
                pred_ids: p.iter().map(|x| x.0).collect(),
                overlaps,
            }
        })
        .collect();

    let mut fp = 0;
    let mut fn_ = 0;
    let mut id_switches = 0;
    let mut last_match: HashMap<u32, u32> = HashMap::new();
    let mut pair_counts: HashMap<(u32, u32), usize> = HashMap::new();
    for r in &results {
        fp += r.frame_match.unmatched_pred.len();
        fn_ += r.frame_match.unmatched_gt.len();
        for &(g, p, _) in &r.frame_match.pairs {
            let (gid, pid) = (r.gt_ids[g], r.pred_ids[p]);
            if last_match.insert(gid, pid).is_some_and(|prev| prev != pid) {
                id_switches += 1;
            }
        }
        for &pair in &r.overlaps {
            *pair_counts.entry(pair).or_default() += 1;
        }
    }

    let gt_count = gt.observation_count();
    let pred_count = pred.observation_count();
    let idtp = best_identity_overlap(gt, pred, &pair_counts);
    let idfp = pred_count - idtp;
    let idfn = gt_count - idtp;
    let denom = 2 * idtp + idfp + idfn;
    let idf1 = if denom == 0 {
        1.0
    } else {
        2.0 * idtp as f64 / denom as f64
    };
    let errors = fn_ + fp + id_switches;
    let mota = if gt_count > 0 {
        1.0 - errors as f64 / gt_count as f64
    } else if errors == 0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    EvalReport {
        idf1,
        id_switches,
        mota,
        idtp,
        idfp,
        idfn,
        fp,
        fn_,
        gt_count,
        pred_count,
    }
}

/// IDTP under the gt-id ↔ pred-id bijection with the most co-located frames.
fn best_identity_overlap(
    gt: &TrackSet,
    pred: &TrackSet,
    pair_counts: &HashMap<(u32, u32), usize>,
) -> usize {
    let gt_ids: Vec<u32> = gt.ids().into_iter().collect();
    let pred_ids: Vec<u32> = pred.ids().into_iter().collect();
    let weights: Vec<Vec<f64>> = gt_ids
        .iter()
        .map(|g| {
            pred_ids
                .iter()
                .map(|p| pair_counts.get(&(*g, *p)).copied().unwrap_or(0) as f64)
                .collect()
        })
        .collect();
    assignment::maximize(&weights, pred_ids.len())
        .into_iter()
        .map(|(g, p)| {
            pair_counts
                .get(&(gt_ids[g], pred_ids[p]))
                .copied()
                .unwrap_or(0)
        })
        .sum()
}
