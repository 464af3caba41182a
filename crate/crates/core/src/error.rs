use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised anywhere in the screening pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("benchmark column `{0}` not found in header")]
    MissingBenchmark(String),

    #[error("column `{0}` has no values")]
    EmptyEntity(String),

    #[error("column `{0}` has no value on the first date; cannot carry forward")]
    MissingFirstValue(String),

    #[error("date sets do not overlap")]
    NoOverlap,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dates of `{0}` do not match the panel calendar")]
    DateMismatch(String),

    #[error("singular design (condition number {condition:e})")]
    SingularDesign { condition: f64 },

    #[error("need at least {required} observations, got {actual}")]
    TooFewObservations { required: usize, actual: usize },

    #[error("need at least 9 quotes to trim 4 from each side, got {0}")]
    TooFewQuotes(usize),

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error("stability index must lie in (0, 2], got {0}")]
    InvalidAlpha(f64),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("array has zero variance")]
    ZeroVariance,

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("explicit step unstable: dt = {dt} exceeds limit {limit}")]
    UnstableStep { dt: f64, limit: f64 },

    #[error("initial field is not separable (factorization residual {0:e})")]
    NotSeparable(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidArgument(_) => 1,
            Error::Parse { .. }
            | Error::MissingBenchmark(_)
            | Error::EmptyEntity(_)
            | Error::MissingFirstValue(_)
            | Error::NoOverlap
            | Error::LengthMismatch { .. }
            | Error::DateMismatch(_)
            | Error::Io { .. } => 2,
            Error::SingularDesign { .. }
            | Error::TooFewObservations { .. }
            | Error::TooFewQuotes(_)
            | Error::InvalidSpec(_)
            | Error::InvalidAlpha(_)
            | Error::GridTooCoarse(_)
            | Error::ZeroVariance
            | Error::ShapeMismatch { .. }
            | Error::UnstableStep { .. }
            | Error::NotSeparable(_) => 3,
        }
    }
}
