use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{what} is not positive definite (eigenvalue {eigenvalue:.3e} <= threshold {threshold:.3e})")]
    NotPositiveDefinite {
        what: String,
        eigenvalue: f64,
        threshold: f64,
    },

    #[error("{0} is not symmetric")]
    NotSymmetric(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero variance in column '{0}'")]
    ZeroVariance(String),

    #[error("label mismatch: {0}")]
    Labels(String),

    #[error("row count mismatch: {left} vs {right} cases")]
    Alignment { left: usize, right: usize },

    #[error("predictors are collinear: {0}")]
    Collinear(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}
