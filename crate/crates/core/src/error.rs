use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A benchmark, instrument, or run configuration that cannot be executed.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Numeric input outside the domain of a closed-form quantity.
    #[error("domain error: {0}")]
    Domain(String),
    /// The agent's decision rule needs information the observation policy withholds.
    #[error("protocol mismatch: {0}")]
    ProtocolMismatch(String),
    #[error("backend unavailable: {0}")]
    UnavailableBackend(String),
    /// The judge endpoint answered with something that does not match the wire schema.
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("ingest error at row {row}: {message}")]
    Ingest { row: usize, message: String },
    #[error("no artifact pair is at least {resolution} apart")]
    EmptyNeighborhood { resolution: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Machine-readable category, stable across releases.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Argument(_) => "argument",
            Error::Domain(_) => "domain",
            Error::ProtocolMismatch(_) => "protocol-mismatch",
            Error::UnavailableBackend(_) => "unavailable-backend",
            Error::Protocol(_) => "protocol",
            Error::Ingest { .. } => "ingest",
            Error::EmptyNeighborhood { .. } => "empty-neighborhood",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 3,
            Error::Argument(_) => 4,
            Error::Domain(_) => 5,
            Error::ProtocolMismatch(_) => 6,
            Error::UnavailableBackend(_) => 7,
            Error::Protocol(_) => 8,
            Error::Ingest { .. } => 9,
            Error::EmptyNeighborhood { .. } => 10,
            Error::Io(_) | Error::Json(_) => 11,
        }
    }
}
