use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid lattice radicand {0}: must be at least 2")]
    InvalidLattice(u32),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("window condition violated: 1s at positions {first} and {second} are within {span} of each other")]
    WindowViolation { first: i64, second: i64, span: u32 },

    #[error("configuration does not follow the periodic tail pattern near position {0}")]
    TailMismatch(i64),

    #[error("configuration has a 1 at position {0}, above the declared window")]
    UnboundedSupport(i64),

    #[error("configuration of type ({theta},{l}) is incompatible with lattice D={d}")]
    TypeMismatch { theta: u32, l: u32, d: u32 },

    #[error("monomial {0:?} is not a Fibonacci monomial for this lattice sector")]
    NotFibonacci(Vec<i64>),

    #[error("result of weight {weight} exceeds degree cutoff {cutoff}")]
    CutoffExceeded { weight: i64, cutoff: i64 },

    #[error("L0 eigenvalue {0} is not an integer")]
    NonIntegralWeight(String),

    #[error("leading principal minor is singular (D={d}, center {center})")]
    SingularMinor { d: u32, center: i64 },

    #[error("rewriting exceeded the bound of {0} steps")]
    NonTermination(usize),

    #[error("target vector is not in the span of the Fibonacci images")]
    Inconsistent,

    #[error("Fibonacci images are linearly dependent (rank {rank} < {count})")]
    AmbiguousSolve { rank: usize, count: usize },

    #[error("charge mismatch: expected {expected}, found {found}")]
    ChargeMismatch { expected: i64, found: i64 },

    #[error("polynomial is not symmetric")]
    NotSymmetric,
}

pub type Result<T> = std::result::Result<T, Error>;
