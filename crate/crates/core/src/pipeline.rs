use crate::connector::connect_logged;
use crate::error::Result;
use crate::splitter::split_all;
use crate::types::{RefineConfig, TrackSet};

/// Tracklet counts around each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefineSummary {
    pub input: usize,
    pub after_split: usize,
    pub after_connect: usize,
    pub merges: usize,
}

/// Splits (unless disabled in `cfg`), then connects.
pub fn refine(ts: &TrackSet, cfg: &RefineConfig) -> Result<(TrackSet, RefineSummary)> {
    let split = if cfg.enable_split() {
        split_all(ts, cfg)?
    } else {
        ts.clone()
    };
    let (connected, steps) = connect_logged(&split, cfg)?;
    let summary = RefineSummary {
        input: ts.len(),
        after_split: split.len(),
        after_connect: connected.len(),
        merges: steps.len(),
    };
    Ok((connected, summary))
}
