use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trace has no samples")]
    EmptyTrace,

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("split ratios must be positive and sum to 1, got {0:?}")]
    InvalidRatios([f64; 3]),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed dataset manifest: field `{field}`: {reason}")]
    FormatError { field: String, reason: String },

    #[error("sample payload truncated: expected {expected} bytes, found {found}")]
    PayloadTruncated { expected: u64, found: u64 },

    #[error("degenerate noise model: {0}")]
    DegenerateModel(String),

    #[error("intermediate frequencies {a_mhz} MHz and {b_mhz} MHz are closer than {min_spacing_mhz} MHz")]
    FrequencyCollision { a_mhz: f64, b_mhz: f64, min_spacing_mhz: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("window of {window} bins is outside [1, {max}]")]
    InvalidWindow { window: usize, max: usize },

    #[error("classes cannot be separated: {0}")]
    DegenerateClasses(String),

    #[error("class centroids coincide (distance {0:e})")]
    DegenerateCentroids(f64),

    #[error("only {found} relaxation traces identified, need at least {required}")]
    InsufficientRelaxations { found: usize, required: usize },

    #[error("feature vector has length {found}, network expects {expected}")]
    FeatureShapeError { expected: usize, found: usize },

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    DivergedTraining { epoch: usize },

    #[error("fixed-point accumulator overflow in layer {layer}")]
    AccumulatorOverflow { layer: usize },

    #[error("{0} pipelines cannot run on truncated traces without retraining")]
    UnsupportedTruncation(String),

    #[error("evaluation set is empty")]
    EmptyEvaluation,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn format(field: &str, reason: impl Into<String>) -> Self {
        Error::FormatError {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
