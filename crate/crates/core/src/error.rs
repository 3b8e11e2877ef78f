use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("embedding has zero norm")]
    ZeroVector,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("line {line}: box width and height must be positive")]
    NonPositiveSize { line: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("bad magic bytes in embedding file")]
    BadMagic,

    #[error("unsupported embedding file version {0}")]
    UnsupportedVersion(u32),

    #[error("embedding file truncated: expected {expected} bytes, found {actual}")]
    TruncatedFile { expected: usize, actual: usize },

    #[error("{rows} tracking rows but {embeddings} embedding rows")]
    CountMismatch { rows: usize, embeddings: usize },

    #[error("track {id} has more than one box on frame {frame}")]
    DuplicateFramePerId { frame: u32, id: u32 },

    #[error("track id {0} appears in more than one tracklet")]
    DuplicateId(u32),

    #[error("tracklet {0} has no observations")]
    EmptyTracklet(u32),

    #[error("observations and embeddings differ in length ({observations} vs {embeddings})")]
    LengthMismatch {
        observations: usize,
        embeddings: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("tracklets {0} and {1} share a frame and cannot be merged")]
    MergeConflict(u32, u32),

    #[error("could not place {requested} prototypes at the requested separation")]
    InfeasibleGeometry { requested: usize },

    #[error("no two tracklets coexist on any frame")]
    NoEligiblePair,
}

pub type Result<T> = std::result::Result<T, Error>;
