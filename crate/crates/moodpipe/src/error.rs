//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any pipeline stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("annotation file {path} is empty")]
    EmptyAnnotations { path: String },

    #[error("annotation file {path}, line {line}: {reason}")]
    MalformedRow {
        path: String,
        line: u64,
        reason: String,
    },

    #[error("annotation header is missing required column '{0}'")]
    MissingHeaderColumn(String),

    #[error("{path}: not a RIFF/WAVE file; convert mp3/ogg sources to WAV first")]
    NotWave { path: String },

    #[error("{path}: unsupported WAV encoding ({detail}); only PCM 16-bit and IEEE-float 32-bit are supported — convert the corpus to plain WAV first")]
    UnsupportedWav { path: String, detail: String },

    #[error("{path}: truncated data chunk: expected {expected} bytes, found {actual}")]
    TruncatedWav {
        path: String,
        expected: usize,
        actual: usize,
    },

    #[error("unknown track id {0}")]
    UnknownTrack(u32),

    #[error("track {0} has no annotations (n = 0)")]
    NoAnnotations(u32),

    #[error("consensus threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),

    #[error("clip for track {track} is shorter than one analysis window ({samples} samples < {window} required)")]
    ClipTooShort {
        track: u32,
        samples: usize,
        window: usize,
    },

    #[error("entropy of an empty partition is undefined")]
    EmptyPartition,

    #[error("column length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cfs merit radicand is non-positive ({0}); correlation inputs are inconsistent")]
    MeritRadicand(f64),

    #[error("t-test for emotion '{emotion}': class '{class}' has {rows} rows (need at least 2)")]
    TtestTooFewRows {
        emotion: String,
        class: &'static str,
        rows: usize,
    },

    #[error("training labels contain a single class; both classes are required")]
    SingleClass,

    #[error("emotion '{0}' has a single class in the training rows; pick a different consensus threshold")]
    SingleClassEmotion(String),

    #[error("mlp training diverged (NaN loss at epoch {epoch}); lower the learning rate")]
    MlpDiverged { epoch: usize },

    #[error("feature row is missing column '{0}'")]
    MissingColumn(String),

    #[error("cannot split {n} tracks into {k} folds")]
    TooFewForFolds { n: usize, k: usize },

    #[error("probability {0} outside [0, 1]")]
    ProbabilityRange(f64),

    #[error("prediction/truth length mismatch: {pred} vs {truth}")]
    MetricLengthMismatch { pred: usize, truth: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing stage artifact: {0}; run the earlier stage first")]
    MissingArtifact(String),

    #[error("artifact hash mismatch: {0}")]
    HashMismatch(String),

    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an io error with the offending path.
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Exit code class for the CLI: 2 for user/config errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::MissingArtifact(_)
            | Error::InvalidThreshold(_)
            | Error::EmptyAnnotations { .. }
            | Error::MalformedRow { .. }
            | Error::MissingHeaderColumn(_)
            | Error::NotWave { .. }
            | Error::UnsupportedWav { .. }
            | Error::TruncatedWav { .. }
            | Error::Io { .. }
            | Error::HashMismatch(_) => 2,
            _ => 1,
        }
    }
}
