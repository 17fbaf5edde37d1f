use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{context} needs at least {needed} samples, got {found}")]
    TooFewSamples {
        context: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular system: zero pivot at row {row}")]
    Singular { row: usize },

    #[error(
        "ill-conditioned system: condition estimate {condition:.3e} exceeds {limit:.0e} \
         (smallest pivot {smallest_pivot:.3e} at row {pivot_row})"
    )]
    IllConditioned {
        condition: f64,
        limit: f64,
        smallest_pivot: f64,
        pivot_row: usize,
    },

    #[error("solution residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },

    #[error(
        "lambda = {lambda:e} is below the minimum {minimum:e}: the centered Gram matrix is \
         rank-deficient (it annihilates the constant vector), so the kernel system is singular"
    )]
    RankDeficientGram { lambda: f64, minimum: f64 },

    #[error("input matrix is not centered (row-sum norm {row_sum_norm:.3e})")]
    NotCentered { row_sum_norm: f64 },

    #[error("kernel matrices are not positive semidefinite (HSIC estimate {value:.3e})")]
    NotPositiveSemidefinite { value: f64 },

    #[error("mu = {mu:e} requires sensitive variables, but the dataset has none")]
    NoSensitiveVariables { mu: f64 },

    #[error("every grid point failed to fit: {}", .failures.join("; "))]
    GridExhausted { failures: Vec<String> },

    #[error("fit failed at mu = {mu:e}: {source}")]
    AtMu {
        mu: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;
