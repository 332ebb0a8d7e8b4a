use thiserror::Error;

/// Errors produced by the sampler, bound calculators, and verification oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {coord} of point is outside the target box: {value} not in [{lo}, {hi}]")]
    OutOfBox {
        coord: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("potential evaluated to a non-finite value")]
    NonFinitePotential,

    #[error("unknown builtin target `{0}`")]
    UnknownTarget(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    #[error("no regularity information: need lipschitz_l, smooth_l, or an explicit tv pair")]
    NoRegularity,

    #[error("unavailable: missing {0}")]
    Unavailable(String),

    #[error("degenerate conditional slice: every cell weight underflowed to zero")]
    DegenerateSlice,

    #[error("probability vectors live on different grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state count {n} exceeds the configured cap {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("transition matrix is not reversible with respect to pi")]
    NotReversible,

    #[error("potential expression: {0}")]
    Expr(String),
}

pub type Result<T> = std::result::Result<T, Error>;
