use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("entry ({row}, {col}) out of range for a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange { row: usize, col: usize, n_rows: usize, n_cols: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("constraint matrix is identically zero")]
    ZeroMatrix,

    #[error("step sizes give eta*tau*|A|^2 = {product} >= 1; metric is not positive definite")]
    StepSizesTooLarge { product: f64 },

    #[error("step sizes must be positive and finite (eta = {eta}, tau = {tau})")]
    InvalidStepSizes { eta: f64, tau: f64 },

    #[error("bounds of variable {index} are inconsistent: {lower} > {upper}")]
    InvalidBounds { index: usize, lower: f64, upper: f64 },

    #[error("non-finite value produced at iteration {k}")]
    NonFinite { k: u64 },

    #[error("iterate norm {norm:e} exceeded the divergence guard at iteration {k}")]
    Diverged { k: u64, norm: f64 },

    #[error("candidate extraction requires at least one iteration")]
    ZeroIteration,

    #[error("rate fit needs at least {needed} usable samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("dense analysis needs n+m <= {limit}, got {size}; use rate fitting instead")]
    DenseLimitExceeded { size: usize, limit: usize },

    #[error("exact oracle limited to {max_vars} variables and {max_cons} constraints (got {vars}, {cons})")]
    OracleTooLarge { vars: usize, cons: usize, max_vars: usize, max_cons: usize },

    #[error("exact elimination exceeded {limit} intermediate constraints")]
    EliminationBlowup { limit: usize },

    #[error("value {0} cannot be represented exactly")]
    NotRepresentable(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}
