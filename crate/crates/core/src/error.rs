use crate::slam::LandmarkId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value: {0}")]
    NonFinite(&'static str),

    #[error("degenerate unscented scaling: N + lambda = {0} must be positive")]
    DegenerateScaling(f64),

    #[error("covariance is not positive definite after jitter escalation")]
    CholeskyFailure,

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("landmark coincides with the sensor origin")]
    ZeroRange,

    #[error("landmark {0} is not in the state")]
    UnknownLandmark(LandmarkId),

    #[error("landmark {0} is already in the state")]
    DuplicateLandmark(LandmarkId),

    #[error("robot did not move between snapshots")]
    ZeroDisplacement,

    #[error("track for landmark {0} is stale")]
    StaleTrack(LandmarkId),

    #[error("could not place landmark {index} after {attempts} attempts")]
    PlacementExhausted { index: usize, attempts: usize },

    #[error("polyline lengths differ ({0} vs {1}) or are shorter than 2")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("dataset line {line}: {msg}")]
    DatasetParse { line: usize, msg: String },

    #[error("filter diverged: {0}")]
    FilterDiverged(Box<Error>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
