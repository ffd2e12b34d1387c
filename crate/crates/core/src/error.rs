use std::path::PathBuf;

use crate::cohort::Endpoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// Variants fall into three families that map onto process exit codes:
/// validation problems with the inputs, numerical failures while fitting,
/// and I/O. See [`Error::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing column `{column}`")]
    MissingColumn { column: String },

    #[error("row {row}: duplicate participant id `{id}`")]
    DuplicateId { id: String, row: usize },

    #[error("row {row}, column `{column}`: {message}")]
    OutOfRangeValue {
        row: usize,
        column: String,
        message: String,
    },

    #[error("cohort is empty")]
    EmptyCohort,

    #[error("no deep features present")]
    NoFeatures,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("no events observed")]
    NoEvents,

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("empty input")]
    EmptyInput,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("participant `{id}` has no outcome for endpoint {endpoint}")]
    MissingOutcome { id: String, endpoint: Endpoint },

    #[error("genotype column `{column}` is required but missing{}", .id.as_ref().map(|i| format!(" for participant `{i}`")).unwrap_or_default())]
    MissingGenotype { column: &'static str, id: Option<String> },

    #[error("eye grades are required by the model but were not supplied")]
    MissingGrades,

    #[error("Newton iteration did not converge after {iterations} iterations (|gradient|_inf = {gradient_norm:e})")]
    Nonconvergence { iterations: usize, gradient_norm: f64 },

    #[error("singular information matrix: {0}")]
    SingularInformation(String),

    #[error("monotone likelihood: the partial likelihood keeps increasing at |beta|_inf = {norm:.3} (bound {bound}); complete separation?")]
    MonotoneLikelihood { norm: f64, bound: f64 },

    #[error("model and data disagree: {0}")]
    ModelDataMismatch(String),

    #[error("model has not converged; Wald statistics are unavailable")]
    NotConverged,

    #[error("regularization path is empty")]
    EmptyPath,

    #[error("bootstrap resample {resample} was degenerate after {attempts} draws")]
    DegenerateResample { resample: usize, attempts: usize },

    #[error("grid time {t} lies outside the observed follow-up [0, {max}]")]
    GridOutOfRange { t: f64, max: f64 },

    #[error("severity score {0} is outside 0..=4")]
    ScoreOutOfRange(i64),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for validation errors, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Nonconvergence { .. }
            | Error::SingularInformation(_)
            | Error::MonotoneLikelihood { .. }
            | Error::NotConverged
            | Error::DegenerateResample { .. } => 3,
            Error::Io { .. } => 4,
            _ => 2,
        }
    }
}
