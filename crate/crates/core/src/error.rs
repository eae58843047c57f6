use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no client update survived validation")]
    EmptyRound,

    #[error("client {client_id}: gradient dimension {actual} does not match expected {expected}")]
    DimensionMismatch {
        client_id: u32,
        expected: usize,
        actual: usize,
    },

    #[error("client {0} submitted more than one update for the round")]
    DuplicateClient(u32),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("shape {shape:?} does not cover {len} values")]
    ShapeMismatch { shape: Vec<usize>, len: usize },

    #[error("sample of size {actual} is too small (need at least {required})")]
    SampleTooSmall { required: usize, actual: usize },

    #[error("estimator weight {0} is outside (0, 1)")]
    InvalidWeight(f64),

    #[error("every value fell outside the outlier thresholds")]
    AllFiltered,

    #[error("trim fraction {trim_fraction} leaves nothing of {n} values")]
    TrimTooAggressive { trim_fraction: f64, n: usize },

    #[error("too few clients: need at least {required}, got {actual}")]
    TooFewClients { required: usize, actual: usize },

    #[error("validation oracle returned a non-finite loss")]
    OracleFailure,

    #[error("sample has zero variance")]
    ConstantSample,

    #[error("sample size {n} outside supported range [{min}, {max}]")]
    SampleSizeOutOfRange { n: usize, min: usize, max: usize },

    #[error("no critical value tabulated for alpha = {0}")]
    UnsupportedAlpha(f64),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed gradient dump: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
