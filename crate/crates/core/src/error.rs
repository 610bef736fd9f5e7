use thiserror::Error;

/// Errors raised by model construction, evidence dispatch and the inference engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum UevError {
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("inconsistent evidence: {0}")]
    InconsistentEvidence(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("evidence places mass on y index {index} whose marginal probability is zero")]
    ZeroMarginal { index: usize },

    #[error("degenerate evidence: {0}")]
    DegenerateEvidence(String),

    #[error("all importance weights are zero (proposal and target supports do not overlap)")]
    AllWeightsZero,

    #[error("initial point is off the target support")]
    InitOffSupport,

    #[error("normalizer Z(x) unavailable for normalized distributional evidence")]
    NormalizerUnavailable,

    #[error("too few draws: {0}")]
    TooFewDraws(String),

    #[error("mixture component {index} (y = {y:?}) failed: {source}")]
    Component {
        index: usize,
        y: Vec<f64>,
        #[source]
        source: Box<UevError>,
    },
}

pub type Result<T> = std::result::Result<T, UevError>;
