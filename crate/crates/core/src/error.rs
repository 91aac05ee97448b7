use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid or trajectory text could not be parsed. `line` and `column` are 1-based.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("map of {nx}x{ny} cells is too small for cubic interpolation (need at least 4x4)")]
    MapTooSmall { nx: usize, ny: usize },

    #[error("covariance of component {0} is not positive definite")]
    NotPositiveDefinite(usize),

    #[error("weight of component {0} must be positive")]
    NonPositiveWeight(usize),

    #[error("point ({x}, {y}) lies outside the reward domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("no reward mass")]
    NoRewardMass,

    #[error("{requested} mixture components requested but only {available} distinct mass points")]
    TooManyComponents { requested: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("initial state lies outside the admissible state set")]
    InfeasibleStart,

    #[error("config error: {0}")]
    Config(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Pipeline stage an error is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Map,
    Gmm,
    Tsp,
    Mpc,
    Output,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Map => "map",
            Stage::Gmm => "GMM",
            Stage::Tsp => "TSP",
            Stage::Mpc => "MPC",
            Stage::Output => "output",
        })
    }
}

impl Error {
    pub fn in_stage(self, stage: Stage) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Stage attribution, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}
