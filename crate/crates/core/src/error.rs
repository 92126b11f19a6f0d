use thiserror::Error;

/// Errors raised by the solvers, learners and file readers in this crate.
#[derive(Debug, Error)]
pub enum SneError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("transition at (h={h}, x={x}, a={a}) depends on the follower action")]
    LeaderControllerViolation { h: usize, x: usize, a: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("no pure follower profile can be induced by any leader strategy")]
    NoPureProfile,

    #[error("grid of {points} points exceeds the limit of {limit}")]
    GridTooLarge { points: u128, limit: u128 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("game is not leader-controller")]
    NotLeaderController,

    #[error("operation requires exactly one follower, found {0}")]
    MultiFollower(usize),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("unsupported format version {0}")]
    FormatVersion(u64),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SneError>;
