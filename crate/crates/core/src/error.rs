use thiserror::Error;

pub type Result<T> = std::result::Result<T, AllocError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocError {
    #[error("problem has no strata")]
    NoStrata,

    #[error("stratum `{label}`: {reason}")]
    InvalidStratum { label: String, reason: String },

    #[error("duplicate stratum label `{0}`")]
    DuplicateLabel(String),

    #[error("sample size must be positive and finite, got {0}")]
    InvalidSampleSize(f64),

    #[error("infeasible: n = {n} exceeds the total upper bound {total}")]
    Infeasible { n: f64, total: f64 },

    #[error("unknown stratum {0}")]
    UnknownStratum(String),

    #[error("take-all set leaves no sample for the remaining strata (s(V) = {0})")]
    InfeasibleSubset(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("population generation failed: {0}")]
    Generation(String),
}
