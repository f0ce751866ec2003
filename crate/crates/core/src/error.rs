use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by data ingestion, learning, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("treatment column not found: {0}")]
    TreatmentColumnNotFound(String),

    #[error("outcome column not found: {0}")]
    OutcomeColumnNotFound(String),

    #[error("unmapped treatment value {value:?} in column {column:?}")]
    UnmappedTreatmentValue { column: String, value: String },

    #[error("unmapped outcome value {value:?} in column {column:?}")]
    UnmappedOutcomeValue { column: String, value: String },

    #[error("column {column:?} must contain both configured values, found only {seen:?}")]
    DegenerateBinaryColumn { column: String, seen: String },

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("csv input has no header row")]
    MissingHeader,

    #[error("predictor column {0:?} has fewer than 2 distinct values")]
    ConstantPredictor(String),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidTrainFraction(f64),

    #[error("invalid generator config: {0}")]
    InvalidGeneratorConfig(String),

    #[error("value {value} out of range for variable {variable:?} (arity {arity})")]
    ValueOutOfRange {
        variable: String,
        value: usize,
        arity: usize,
    },

    #[error("assignment covers {found} predictors, schema has {expected}")]
    AssignmentLength { expected: usize, found: usize },

    #[error("tree is already in standard form")]
    AlreadyStandardForm,

    #[error("expected a tree in {expected} form")]
    WrongTreeForm { expected: &'static str },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("model file is malformed: {0}")]
    MalformedModel(String),

    #[error("unsupported model format version {0}")]
    UnsupportedFormatVersion(u32),

    #[error("schema fingerprint mismatch: model was built for {expected}, data has {found}")]
    SchemaFingerprintMismatch { expected: String, found: String },

    #[error("children counts do not sum to parent counts")]
    CountMismatch,

    #[error("invalid score params: {0}")]
    InvalidScoreParams(String),

    #[error("treatment arm {0:?} has no records")]
    EmptyTreatmentArm(String),

    #[error("postprocess requires every leaf's parent to be a treatment split")]
    PostprocessPrecondition,

    #[error("segment report requires treatment splits to sit directly above leaves")]
    UnsupportedTreeShape,

    #[error("no test records matched the policy's recommendations")]
    NoMatchedRecords,

    #[error("no mailed records in the test set")]
    NoMailedRecords,

    #[error("invalid cost/benefit: {0}")]
    InvalidCostBenefit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
