use rug::Integer;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse number {0}")]
    Parse(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by a ball containing zero")]
    DivisionByZero,
    #[error("invalid precision policy: {0}")]
    InvalidPolicy(String),
    #[error("precision escalation exhausted at {max_bits} bits")]
    EscalationExhausted { max_bits: u32 },
    #[error("first derivative vanishes on the enclosure")]
    DerivativeVanishes,
    #[error("floor(x/2) is ambiguous: the enclosure straddles an even integer")]
    AmbiguousFloor,
    #[error("iteration cap of {cap} steps exceeded")]
    CapExceeded { cap: u64, partial: Vec<Integer> },
    #[error("no certified sign change of f' in the bracket around {n}")]
    BracketFailure { n: i64 },
    #[error("cycle {label} not found from its seed")]
    CycleNotFound { label: String },
    #[error("points do not form a cycle: {0}")]
    NotACycle(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("empty sequence")]
    EmptySequence,
    #[error("quadrature did not converge after {points} points")]
    QuadratureDivergence { points: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
