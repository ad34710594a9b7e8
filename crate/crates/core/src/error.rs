use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("line {line}: expected {expected} fields, found {found}")]
    Arity {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column '{column}': cannot parse '{value}' as a number")]
    NumericCell {
        line: usize,
        column: String,
        value: String,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: order references unknown object id '{id}'")]
    UnknownId { line: usize, id: String },

    #[error("line {line}: object id '{id}' appears more than once")]
    DuplicateId { line: usize, id: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unknown feature '{0}'")]
    UnknownFeature(String),

    #[error("feature '{feature}' is {actual}, expected {expected}")]
    FeatureKind {
        feature: String,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("feature '{0}' is constant; exclude it instead of rescaling")]
    ConstantFeature(String),

    #[error("preprocessing step {index}: {source}")]
    PlanStep {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("no usable preference pairs: {0}")]
    NoPairs(String),

    #[error("non-finite training loss at epoch {epoch}; the learning rate is probably too high")]
    NonFiniteLoss { epoch: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cancelled")]
    Cancelled,

    #[error("unsupported model format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("invalid JSON at byte offset {offset}: {message}")]
    Json { offset: usize, message: String },

    #[error("invalid field '{path}': {message}")]
    Field { path: String, message: String },

    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn file(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
        move |source| Error::File {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn in_step(self, index: usize) -> Self {
        Error::PlanStep {
            index,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_fold(self, fold: usize) -> Self {
        match self {
            Error::Cancelled => Error::Cancelled,
            other => Error::Fold {
                fold,
                source: Box::new(other),
            },
        }
    }
}
