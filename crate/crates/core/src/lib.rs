//! Offline refinement of multi-object tracking output.
//!
//! Two stages run over a finished tracking result plus one appearance
//! embedding per detection:
//!
//! 1. [`splitter`] breaks up tracklets whose embeddings form several
//!    well-separated clusters (one id covering several people).
//! 2. [`connector`] merges tracklets that never coexist in time, start near
//!    where the other ended, and look alike (one person under several ids).
//!
//! [`formats`] reads and writes the tracking and embedding files, [`metrics`]
//! scores a result against ground truth and [`synth`] builds scenarios with
//! known answers.

pub mod assignment;
pub mod connector;
pub mod error;
pub mod formats;
pub mod metrics;
pub mod pipeline;
pub mod splitter;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use pipeline::{refine, RefineSummary};
pub use types::{
    cosine_distance, mean_feature, normalize_embedding, temporal_overlap, BoundingBox,
    BoxObservation, Embedding, RefineConfig, TrackSet, Tracklet,
};
