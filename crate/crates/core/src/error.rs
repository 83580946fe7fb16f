use thiserror::Error;

/// Errors produced by the simulator, gap model and optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid radius range [{min}, {max}]: need 0 < min <= max")]
    InvalidRadiusRange { min: f64, max: f64 },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid channel parameters: {0}")]
    InvalidChannelParams(String),

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("vector is degenerate (standard deviation {std:e} below threshold)")]
    DegenerateVector { std: f64 },

    #[error("vector too short for normalization: length {0}, need at least 2")]
    VectorTooShort(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid power plan: {0}")]
    InvalidPlan(String),

    #[error("receive normalizing factor must be positive, got {0}")]
    NonPositiveNormalizer(f64),

    #[error("model standard deviation must be positive for cell {cell}, got {nu}")]
    NonPositiveModelStd { cell: usize, nu: f64 },

    #[error("invalid profiling vector: {0}")]
    InvalidProfile(String),

    #[error("learning rate {eta} violates 0 < eta < 1/L with L = {smoothness}")]
    StepTooLarge { eta: f64, smoothness: f64 },

    #[error("malformed feasibility problem: {0}")]
    MalformedProblem(String),

    #[error("no feasible point found after bracket growth up to {upper:e}")]
    NoFeasiblePoint { upper: f64 },

    #[error("invalid bisection bracket: {0}")]
    InvalidBracket(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("batch size {batch} exceeds shard size {shard}")]
    BatchTooLarge { batch: usize, shard: usize },

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("IDX format error: {0}")]
    Idx(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
