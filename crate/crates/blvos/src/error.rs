use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid multiplier spec: {0}")]
    Spec(String),
    #[error("invalid model configuration: {0}")]
    Model(String),
    #[error("unknown voltage level {0} V; not one of the configured approximate levels")]
    UnknownLevel(f64),
    #[error("supply voltage {v} V outside the threshold anchor range [{min}, {max}] V")]
    VoltageRange { v: f64, min: f64, max: f64 },
    #[error(
        "overscaling below threshold margin: {headroom:.4} V headroom at {v} V (floor {floor} V)"
    )]
    BelowThresholdMargin { v: f64, headroom: f64, floor: f64 },
    #[error("negative stress time {0} s")]
    NegativeTime(f64),
    #[error("lookup tables support n <= {max}, got n = {n}")]
    TableTooLarge { n: u32, max: u32 },
    #[error("table sidecar mismatch: expected config hash {expected}, found {found}")]
    TableHashMismatch { expected: String, found: String },
    #[error("empty sweep axis: {0}")]
    EmptyAxis(&'static str),
    #[error("voltage level lists do not match: {0}")]
    LevelsMismatch(String),
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("image {0}x{1} is smaller than the {2}x{2} comparison window")]
    WindowTooLarge(usize, usize, usize),
    #[error("kernel coefficient magnitude {0} does not fit in 8 bits")]
    KernelRange(i32),
    #[error(transparent)]
    Pgm(#[from] PgmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// PGM reader/writer failures, each payload problem reported distinctly.
#[derive(Debug, Error)]
pub enum PgmError {
    #[error("malformed PGM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported PGM maxval {0}; only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("truncated PGM payload: expected {expected} pixels, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("PGM I/O error: {0}")]
    Io(#[from] std::io::Error),
}
