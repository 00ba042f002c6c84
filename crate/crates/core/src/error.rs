use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {required} nodes, got {got}")]
    TooFewNodes { required: usize, got: usize },

    #[error("node {0} cannot link to itself")]
    SelfLink(usize),

    #[error("node index {index} out of range for {len} nodes")]
    NodeOutOfRange { index: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("level {0} dBm is not in the register map")]
    LevelOutsideMap(f64),

    #[error("transmission log is empty")]
    EmptyLog,

    #[error("reports describe different topologies")]
    TopologyMismatch,

    #[error("mode `{0}` not present in report")]
    MissingMode(String),

    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
