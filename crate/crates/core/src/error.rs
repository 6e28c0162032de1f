use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid label {0}: expected 0 or 1")]
    InvalidLabel(i64),

    #[error("duplicate id {0:?}")]
    DuplicateId(String),

    #[error("invalid ngram range {min}..={max}")]
    InvalidNgramRange { min: usize, max: usize },

    #[error("invalid assignment {id:?}: {message}")]
    InvalidAssignment { id: String, message: String },

    #[error("response for assignment {response:?} checked against assignment {spec:?}")]
    AssignmentMismatch { response: String, spec: String },

    #[error("incomplete answers from worker {worker:?} on assignment {assignment:?}: {message}")]
    IncompleteAnswers {
        assignment: String,
        worker: String,
        message: String,
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid rating matrix: {0}")]
    InvalidRatingMatrix(String),

    #[error("agreement undefined: {0}")]
    UndefinedAgreement(&'static str),

    #[error("cannot sample {k} responses from an item with {available}")]
    NotEnoughResponses { k: usize, available: usize },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("training set has a single class")]
    SingleClass,

    #[error("feature index {index} out of range for vocabulary of size {size}")]
    DimensionMismatch { index: usize, size: usize },

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("invalid confidence level {0}")]
    InvalidLevel(f64),

    #[error("cannot draw {k} items from a pool of {pool}")]
    SampleTooLarge { k: usize, pool: usize },

    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },

    #[error("strategy {strategy} cannot be used with learner {learner}: {message}")]
    Arity {
        strategy: String,
        learner: String,
        message: &'static str,
    },

    #[error("{} referential problem(s): {}", .0.len(), .0.join("; "))]
    Referential(Vec<String>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("document {0:?} has no label")]
    Unlabeled(String),

    #[error("degenerate synthetic spec: {0}")]
    DegenerateSpec(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
