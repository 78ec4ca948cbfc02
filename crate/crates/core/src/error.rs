use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("axis {axis} out of range for a {dim}-dimensional grid")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("speed c = {c} outside the admissible range {range}")]
    SpeedOutOfRange { c: f64, range: &'static str },

    #[error("singular symbol: {0}")]
    SingularSymbol(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// max|u3| reached the lifting margin, i.e. a vortex (or something close
    /// to one) is present and no global phase exists.
    #[error("vortex present: max|u3| = {max_u3} exceeds 1 - margin = {limit}")]
    VortexPresent { max_u3: f64, limit: f64 },

    #[error("phase unwrapping failed: {0}")]
    Unwrap(String),

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("grid too small: {0}")]
    DomainTooSmall(String),

    #[error("insufficient decay range: {0}")]
    InsufficientDecay(String),

    #[error("field format error at byte offset {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
