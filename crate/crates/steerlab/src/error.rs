//! Crate-wide error type.

use thiserror::Error;

/// Unified error type for all steerlab operations.
#[derive(Debug, Error)]
pub enum Error {
    // --- runtime ---
    #[error("prompt {index} tokenizes to {got} tokens, but offset {offset} needs at least {needed}")]
    PromptTooShort {
        index: usize,
        offset: i64,
        needed: usize,
        got: usize,
    },
    #[error("failed to load model `{0}`: {1}")]
    ModelLoad(String, String),
    #[error("generation timed out after {0} steps")]
    GenerationTimeout(usize),
    #[error("intervention direction has length {got}, model hidden dim is {expected}")]
    InterventionDimMismatch { expected: usize, got: usize },

    // --- vector math / tensors ---
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("direction is not unit norm (|norm - 1| = {0:.3e})")]
    NotUnitNorm(f64),
    #[error("zero-norm vector where a direction was required")]
    ZeroNormDirection,

    // --- direction selection ---
    #[error("no candidate direction passes all selection filters")]
    NoFeasibleCandidate,

    // --- geometry ---
    #[error("fewer than {needed} valid layers ({got}) for the paired analysis")]
    InsufficientLayers { needed: usize, got: usize },

    // --- instruments ---
    #[error("GSS option must be in 1..=4, got {0}")]
    InvalidOption(i64),
    #[error("no valid records in group `{0}`")]
    EmptyGroup(String),
    #[error("no external judge configured")]
    JudgeUnavailable,
    #[error("invalid item bank record: {0}")]
    BadItemRecord(String),

    // --- statistics ---
    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("Gram matrix X'X is singular")]
    SingularGram,
    #[error("REML search did not converge; last bracket [{lo:.6e}, {hi:.6e}]")]
    NonConvergence { lo: f64, hi: f64 },
    #[error("p-value {0} outside [0, 1]")]
    InvalidP(f64),
    #[error("need at least {needed} paired samples, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    // --- pipeline ---
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("stage `{stage}` failed: {source}")]
    StageFailure {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("missing artifact `{0}`; run the stage that produces it first")]
    MissingArtifact(String),

    // --- IO / formats ---
    #[error("container error: {0}")]
    Container(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
