use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Qubit indices out of range, duplicated, or inconsistent with a gate.
    #[error("layout error: {0}")]
    Layout(String),
    /// A numerical object failed its structural check (unitarity, idempotence, ...).
    #[error("validation error: {0}")]
    Validation(String),
    /// The network graph is not connected.
    #[error("graph is disconnected; components: {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },
    /// A request exceeds a configured size budget.
    #[error("capacity error: {what} needs {requested}, limit is {limit}")]
    Capacity {
        what: String,
        requested: u64,
        limit: u64,
    },
    /// A protocol script violates the interaction model.
    #[error("protocol error at turn {turn}: {detail}")]
    Protocol { turn: String, detail: String },
    /// An input has the wrong turn structure for a transform.
    #[error("shape error: {0}")]
    Shape(String),
    /// Invalid optimizer or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn protocol(turn: impl std::fmt::Display, detail: impl Into<String>) -> Self {
        Error::Protocol {
            turn: turn.to_string(),
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Layout(_) => "layout",
            Error::Validation(_) => "validation",
            Error::Disconnected { .. } => "disconnected",
            Error::Capacity { .. } => "capacity",
            Error::Protocol { .. } => "protocol",
            Error::Shape(_) => "shape",
            Error::Config(_) => "config",
            Error::Unsupported(_) => "unsupported",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
