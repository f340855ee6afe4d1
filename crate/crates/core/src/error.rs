use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("trait table row {row}, column {column}: {reason}")]
    TraitValue {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("duplicate participant_id {0:?}")]
    DuplicateParticipant(String),

    #[error("partial {family} family: {detail}")]
    PartialFamily { family: String, detail: String },

    #[error("cohort join is empty: no participant has both a stream and a trait family")]
    EmptyCohort,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("singular design: column {column} is linearly dependent on earlier columns")]
    SingularDesign { column: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("width mismatch: expected {expected} features, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("labels contain a single class; at least two are required")]
    SingleClass,

    #[error("class {class} is absent from the training split")]
    MissingClass { class: String },

    #[error("planted link {link} pushes the mean of {feature} off the simplex ({detail})")]
    PlantRejected {
        link: usize,
        feature: String,
        detail: String,
    },

    #[error("cohort mismatch: ground truth {expected}, pipeline outputs {got}")]
    CohortMismatch { expected: String, got: String },

    #[error("unsupported schema version {0:?}")]
    SchemaVersion(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn insufficient(msg: impl Into<String>) -> Self {
        Error::InsufficientData(msg.into())
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingInput(_) => 2,
            Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => 2,
            Error::Invariant(_) => 4,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::TraitValue { .. } => "trait_value",
            Error::DuplicateParticipant(_) => "duplicate_participant",
            Error::PartialFamily { .. } => "partial_family",
            Error::EmptyCohort => "empty_cohort",
            Error::InsufficientData(_) => "insufficient_data",
            Error::UndefinedCorrelation(_) => "undefined_correlation",
            Error::SingularDesign { .. } => "singular_design",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::WidthMismatch { .. } => "width_mismatch",
            Error::SingleClass => "single_class",
            Error::MissingClass { .. } => "missing_class",
            Error::PlantRejected { .. } => "plant_rejected",
            Error::CohortMismatch { .. } => "cohort_mismatch",
            Error::SchemaVersion(_) => "schema_version",
            Error::MissingInput(_) => "missing_input",
            Error::Invariant(_) => "invariant",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::Config(_) => "config",
        }
    }
}
