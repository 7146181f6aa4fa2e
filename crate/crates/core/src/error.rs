use thiserror::Error;

pub type Result<T> = std::result::Result<T, HppError>;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Guard,
    Invariant,
    Runtime,
}

#[derive(Debug, Error)]
pub enum HppError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{e} exceeds the supported maximum of {max}")]
    FieldTooLarge { p: u64, e: u32, max: u64 },
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("element code {code} does not belong to a field of order {order}")]
    NotInField { code: u32, order: u32 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("duplicate interpolation abscissa {0}")]
    DuplicateAbscissa(u32),
    #[error("interpolation needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("interpolation points are inconsistent with degree bound {0}")]
    InconsistentPoints(usize),
    #[error("operation needs arity at least {needed}, got {got}")]
    ArityTooSmall { needed: usize, got: usize },
    #[error("field order {d} must exceed the degree bound {n}")]
    FieldTooSmall { d: u32, n: usize },
    #[error("too few trials: {0}")]
    TooFewTrials(usize),
    #[error("guard `{guard}` exceeded: {requested} > {limit}")]
    GuardExceeded {
        guard: &'static str,
        limit: u64,
        requested: u64,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("analysis not applicable: {0}")]
    AnalysisInapplicable(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("univariate solver failed after {attempts} attempts")]
    SolverFailed { attempts: usize },
    #[error("no collision within {0} queries")]
    QueriesExhausted(u64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HppError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            HppError::GuardExceeded { .. } => ErrorKind::Guard,
            HppError::Invariant(_) => ErrorKind::Invariant,
            HppError::SolverFailed { .. } | HppError::QueriesExhausted(_) | HppError::Io(_) => {
                ErrorKind::Runtime
            }
            _ => ErrorKind::Usage,
        }
    }
}
