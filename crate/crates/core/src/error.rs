use thiserror::Error;

/// Errors raised anywhere in the model pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GasError {
    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),

    #[error("dimension {dim} is not supported by `{dist}`")]
    DimensionUnsupported { dist: String, dim: usize },

    #[error("observation {value:?} outside the support of `{dist}`")]
    SupportViolation { dist: String, value: Vec<f64> },

    #[error("observation at t={t} outside the support of `{dist}`")]
    SupportViolationAt { dist: String, t: usize },

    #[error("parameter {index} = {value} outside its admissible range")]
    ParamOutOfBounds { index: usize, value: f64 },

    #[error("parameter vector has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("score scaling `{scaling}` is not supported by `{dist}`")]
    ScalingUnsupported { dist: String, scaling: String },

    #[error("moment undefined for `{0}` at the given parameters")]
    MomentUndefined(String),

    #[error("operation is only defined for univariate distributions")]
    MultivariateUnsupported,

    #[error("information matrix is singular (smallest eigenvalue {0:e})")]
    SingularInformation(f64),

    #[error("filter state diverged at t={t}, parameter {index}")]
    NonFiniteState { t: usize, index: usize },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("optimizer did not converge: {0}")]
    NoConvergence(String),

    #[error("Hessian of the negative log-likelihood is not positive definite")]
    HessianNotPD,

    #[error("invalid forecast horizon {0}")]
    InvalidHorizon(usize),

    #[error("simulated draws were not retained; rerun with draws enabled")]
    DrawsUnavailable,

    #[error("{dropped} of {total} simulated paths diverged (limit 1%)")]
    TooManyDroppedDraws { dropped: usize, total: usize },

    #[error("invalid integration grid: {0}")]
    InvalidGrid(String),

    #[error("predictive cdf decreases at t={t} (z={z})")]
    NonMonotoneCdf { t: usize, z: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("loss differential has zero variance")]
    ZeroVarianceDifferential,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, GasError>;
