use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operator: {0}")]
    UnsupportedOperator(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("degenerate method: every beta coefficient is zero")]
    DegenerateMethod,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("decreasing abscissa rejected: stage {stage} uses stage {source_stage} (c_i - c_j = {delta})")]
    DecreasingAbscissaRejected {
        stage: usize,
        source_stage: usize,
        delta: f64,
    },

    #[error("step size underflow at t = {t}: dt = {dt} fell below dt_min")]
    StiffnessFailure { t: f64, dt: f64 },

    #[error("step budget of {0} exceeded")]
    BudgetExceeded(usize),

    #[error("insufficient data: {usable} usable rows, need at least 3")]
    InsufficientData { usable: usize },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
