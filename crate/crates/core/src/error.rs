use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column {column:?} in {path}")]
    Schema { path: String, column: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("division domain error on {date}: denominator {value}")]
    DivisionDomain { date: NaiveDate, value: f64 },
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("gap at {date} precedes the first observation ({first})")]
    UncoverableGap { date: NaiveDate, first: NaiveDate },
    #[error("domain error on {date}: value {value} must be positive")]
    Domain { date: NaiveDate, value: f64 },
    #[error("slice [{start}, {end}] contains no rows")]
    EmptySlice { start: NaiveDate, end: NaiveDate },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
    #[error("rank deficiency: {0}")]
    RankDeficient(String),
    #[error("identification failure: {0}")]
    Identification(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("non-stationary specification: companion spectral radius {0:.6} >= 1")]
    NonStationary(f64),
    #[error("cyclic structure: no permutation makes the instantaneous matrix strictly lower triangular")]
    Cyclic,
    #[error("bootstrap unreliable: {dropped} of {total} replicates dropped")]
    Reliability { dropped: usize, total: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => ErrorClass::Config,
            Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Schema { .. }
            | Error::Parse { .. }
            | Error::EmptyInput(_)
            | Error::DuplicateDate(_)
            | Error::DivisionDomain { .. }
            | Error::Alignment(_)
            | Error::UncoverableGap { .. }
            | Error::Domain { .. }
            | Error::EmptySlice { .. }
            | Error::InsufficientData(_)
            | Error::UnsupportedSize(_) => ErrorClass::Data,
            Error::Degenerate(_)
            | Error::RankDeficient(_)
            | Error::Identification(_)
            | Error::Singular(_)
            | Error::NonStationary(_)
            | Error::Cyclic
            | Error::Reliability { .. } => ErrorClass::Numerical,
            Error::Stage { source, .. } => source.class(),
        }
    }

    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
