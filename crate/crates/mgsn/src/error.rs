use thiserror::Error;

/// Errors produced by the numeric kernel, the distribution layer and the
/// fitting layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A matrix handed to a symmetric constructor deviates from symmetry by
    /// more than the allowed relative tolerance.
    #[error("matrix is not symmetric (max relative asymmetry {max_rel:e})")]
    NotSymmetric { max_rel: f64 },

    /// A Cholesky pivot was non-positive: the matrix is singular or
    /// indefinite.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An operation that needs at least one element received none.
    #[error("empty input")]
    EmptyInput,

    /// MGF argument lies outside the convergence region.
    #[error("argument outside the MGF domain")]
    OutsideDomain,

    /// Marginal index set is empty, out of range or not strictly increasing.
    #[error("invalid index set for marginal extraction")]
    BadIndexSet,

    /// A projection matrix does not have full row rank.
    #[error("projection matrix is rank deficient")]
    RankDeficient,

    /// Every term of a conditional-moment series underflowed, even in the
    /// log domain; the evaluation point is an extreme outlier.
    #[error("series underflow{}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    SeriesUnderflow { row: Option<usize> },

    /// The M-step covariance update stayed non-positive-definite after the
    /// full jitter escalation; the data are too few or collinear.
    #[error("degenerate covariance update at EM iteration {iteration}")]
    DegenerateUpdate { iteration: usize },

    /// A parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Nested-model log-likelihood ordering was violated beyond tolerance.
    #[error("likelihood-ratio statistic {statistic} below -1e-6: nested fits are inconsistent")]
    LikelihoodOrdering { statistic: f64 },

    /// Every grid point of a profile-likelihood search failed.
    #[error("profile likelihood failed at all {0} grid points")]
    AllGridPointsFailed(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
