use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dense dimension {dim} exceeds the configured cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("operator is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid interaction term: {0}")]
    InvalidTerm(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("step threshold {eta} must lie in (0, 1)")]
    DegenerateThreshold { eta: f64 },

    #[error("operators share site ({0}, {1})")]
    OverlappingSupports(usize, usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("requested sample dimension {requested} exceeds subspace dimension {available}")]
    VTooLarge { requested: usize, available: usize },

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("cut rank {rank} at cut {cut} exceeds rank budget {budget}")]
    RankBudgetExceeded { cut: usize, rank: usize, budget: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no repetition produced an output with residual energy at most {delta}")]
    NoViableOutput { delta: f64 },

    #[error("site ({0}, {1}) has ambiguous sign: |<Z>| = {2}")]
    AmbiguousSign(usize, usize, f64),

    #[error("pauli table would hold {entries} entries, above the cap {cap}")]
    TableTooLarge { entries: usize, cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
