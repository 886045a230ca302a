use thiserror::Error;

/// Errors surfaced by the library. The CLI maps these onto exit codes:
/// config/validation -> 2, solver faults -> 3, property failures -> 4, i/o -> 5.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("profiles live on different domains")]
    MismatchedDomains,

    #[error("forcing floor: amplitude {amplitude} gives minimum boundary value {min_value} < epsilon0 = {floor}")]
    ForcingFloor {
        amplitude: f64,
        min_value: f64,
        floor: f64,
    },

    #[error("positivity set reached the truncation guard band; enlarge the computational box")]
    Truncation,

    #[error("solver: {0}")]
    Solver(String),

    #[error("internal consistency: {0}")]
    Inconsistency(String),

    #[error("property failure: {0}")]
    Property(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI should use for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Invalid(_) | Error::ForcingFloor { .. } => 2,
            Error::MismatchedDomains
            | Error::Truncation
            | Error::Solver(_)
            | Error::Inconsistency(_) => 3,
            Error::Property(_) => 4,
            Error::Io(_) | Error::Json(_) => 5,
        }
    }
}
