use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty corpus: need at least one non-empty document")]
    EmptyCorpus,

    #[error("need at least {min} documents, got {got}")]
    TooFewDocuments { min: usize, got: usize },

    #[error("split ratios must be positive and sum to 1, got ({0}, {1}, {2})")]
    BadSplitRatios(f64, f64, f64),

    #[error("invalid pipeline: {0}")]
    BadPipeline(String),

    #[error("n-gram order must be in [1, {max}], got {got}")]
    BadOrder { got: usize, max: usize },

    #[error("reserved token {0:?} appears in a training document")]
    ReservedToken(String),

    #[error("cannot estimate discounts at order {order}: count-of-counts n{r} is zero (data too small; enable the discount fallback)")]
    DegenerateCounts { order: usize, r: usize },

    #[error("cannot estimate discounts at order {order}: D{r} = {value} is out of range (data too small; enable the discount fallback)")]
    DiscountOutOfRange { order: usize, r: usize, value: f64 },

    #[error("{path}:{line}: {msg}")]
    ArpaFormat {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("both classes must be present, found only {0:?}")]
    SingleClass(crate::corpus::Label),

    #[error("threshold grid needs at least 2 points, got {0}")]
    BadGridSize(usize),

    #[error("theta must be finite and positive, got {0}")]
    BadTheta(f64),

    #[error("prediction/gold id sets differ: {missing} gold ids missing from predictions, {extra} extra prediction ids; first few: missing {missing_sample:?}, extra {extra_sample:?}")]
    IdMismatch {
        missing: usize,
        extra: usize,
        missing_sample: Vec<String>,
        extra_sample: Vec<String>,
    },

    #[error("no documents to evaluate")]
    EmptyEval,

    #[error("{0}")]
    BadParameter(String),

    #[error("model file {path}: {msg}")]
    BadModelFile { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
