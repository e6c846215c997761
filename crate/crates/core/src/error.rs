use thiserror::Error;

/// Errors produced anywhere in the estimation and testing pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("every bandwidth in the grid leaves more than 5% of leave-one-out fits undefined")]
    AllDegenerate,

    #[error("population {population}: fit undefined at observation {index} inside the weighted support")]
    FlaggedInsideSupport { population: usize, index: usize },

    #[error("population {population}: mean score derivative {nu:e} is numerically zero")]
    SingularScore { population: usize, nu: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("schema: {0}")]
    Schema(String),

    #[error("need at least 2 groups, found {0}")]
    TooFewGroups(usize),

    #[error("config {path}: {message}")]
    Config { path: String, message: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Whether the error comes from bad user input rather than a numeric failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::InsufficientData(_)
                | Error::Parse { .. }
                | Error::Schema(_)
                | Error::TooFewGroups(_)
                | Error::Config { .. }
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
