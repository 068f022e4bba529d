use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("invalid direction vector: {0}")]
    InvalidDirection(String),

    #[error("transmitter and receiver positions coincide")]
    CoincidentPositions,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation requires an active panel")]
    NotActive,

    #[error("invalid reflection configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("zero-forcing infeasible: {antennas} BS antennas < {users} users")]
    ZeroForcingInfeasible { antennas: usize, users: usize },

    #[error("path uses missing edge {0} -> {1}")]
    MissingEdge(String, String),

    #[error("nodes `{0}` and `{1}` share a position")]
    DuplicatePosition(String, String),

    #[error("no feasible reflection path between BS and user")]
    Disconnected,

    #[error("measurement log: {0}")]
    Log(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
