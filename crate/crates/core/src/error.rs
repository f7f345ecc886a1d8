use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-binary treatment{}: {reason}", row_suffix(*.row))]
    NonBinaryTreatment { row: Option<usize>, reason: String },

    #[error("outcome {value} at row {row} lies outside [{y_min}, {y_max}]")]
    OutcomeOutOfRange {
        row: usize,
        value: f64,
        y_min: f64,
        y_max: f64,
    },

    #[error("non-finite value in {column} at row {row}")]
    NonFiniteEntry { row: usize, column: String },

    #[error("too few observations: have {have}, need at least {need}")]
    TooFewObservations { have: usize, need: usize },

    #[error("degenerate outcome range: y_min = {y_min} must be below y_max = {y_max}")]
    DegenerateOutcomeRange { y_min: f64, y_max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training set for fold {fold} contains only one treatment arm")]
    DegenerateFold { fold: usize },

    #[error("learner failure: {0}")]
    LearnerFailure(String),

    #[error("quantile table is empty")]
    EmptyTable,

    #[error("nuisance fit does not match the dataset: {0}")]
    MisalignedFit(String),

    #[error("zero variance estimate for the {side} bound at eps = {eps}")]
    ZeroVariance { side: &'static str, eps: f64 },

    #[error("root finding failed: {0}")]
    NoRoot(String),

    #[error("the bounds never contain zero on eps in [{lo}, {hi}]")]
    NoCrossing { lo: f64, hi: f64 },

    #[error("derivative of the eps0 moment condition is degenerate ({value:e})")]
    DegenerateDerivative { value: f64 },

    #[error("implied probability {value} outside [0, 1]: {what}")]
    ProbabilityOutOfRange { what: String, value: f64 },

    #[error("replicate {index} failed: {source}")]
    Replicate { index: usize, source: Box<Error> },

    #[error("i/o error: {0}")]
    Io(String),
}

fn row_suffix(row: Option<usize>) -> String {
    match row {
        Some(r) => format!(" at row {r}"),
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
