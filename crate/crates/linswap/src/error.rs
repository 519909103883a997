use thiserror::Error;

/// Failures reported by the oracles, engines and solvers in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical stall in {0}")]
    NumericalStall(String),

    #[error("projection is within tolerance of the query point but membership failed")]
    DegenerateProjection,

    #[error("ellipsoid shape collapsed")]
    ShapeDegenerate,

    #[error("iteration cap of {cap} exceeded")]
    IterationCapExceeded { cap: usize },

    #[error("semi-separation margin {margin:e} is below the oracle tolerance")]
    InconsistentOracle { margin: f64 },

    #[error("projection radius {q} exceeded its bound {bound}")]
    QExceededBound { q: f64, bound: f64 },

    #[error("no fixed point found for the projected map (residual {residual:e})")]
    FixedPointMissing { residual: f64 },

    #[error("body shape not supported here: {0}")]
    UnsupportedBody(String),

    #[error("compressed primal infeasible (best value {value:e})")]
    CompressedPrimalInfeasible { value: f64 },

    #[error("invalid game: {0}")]
    InvalidGame(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
