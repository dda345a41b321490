use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("missing column \"{0}\"")]
    MissingColumn(String),
    #[error("non-uniform sampling at line {line}: dt = {dt:e} s, expected {expected:e} s")]
    NonUniformSampling { line: u64, dt: f64, expected: f64 },
    #[error("{what} too short: need at least {needed}, got {got}")]
    TooShort {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("phase {0} has zero power; SNR is undefined")]
    ZeroPower(char),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("unknown feature: {0}")]
    UnknownFeature(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("feature schema mismatch: model expects {expected}, got {got}")]
    SchemaMismatch { expected: String, got: String },
    #[error("label set mismatch: {0}")]
    LabelMismatch(String),
    #[error("missing stage model: {0}")]
    MissingStage(&'static str),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable tag used in machine-readable error prefixes.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::MissingColumn(_) => "missing-column",
            Error::NonUniformSampling { .. } => "non-uniform-sampling",
            Error::TooShort { .. } => "too-short",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::OutOfRange(_) => "out-of-range",
            Error::ZeroPower(_) => "zero-power",
            Error::NonFinite(_) => "non-finite",
            Error::UnknownFeature(_) => "unknown-feature",
            Error::Degenerate(_) => "degenerate",
            Error::SchemaMismatch { .. } => "schema-mismatch",
            Error::LabelMismatch(_) => "label-mismatch",
            Error::MissingStage(_) => "missing-stage",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
