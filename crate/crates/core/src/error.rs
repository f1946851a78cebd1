use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("line {line}: close must be positive, got {value}")]
    NonPositivePrice { line: u64, value: f64 },

    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: u64, date: String },

    #[error("dates are not strictly increasing at index {index}")]
    NonMonotonicDates { index: usize },

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("sample has zero variance")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("series contains no draw-downs")]
    NoDrawdowns,

    #[error("no cutoff leaves at least {min_tail} points in the tail (set has {n_total})")]
    TailTooSmall { min_tail: usize, n_total: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown figure `{0}`")]
    UnknownFigure(String),

    #[error("symbol `{0}` has no group")]
    UnmappedSymbol(String),

    #[error("{symbol}: {source}")]
    Series {
        symbol: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn for_series(self, symbol: &str) -> Error {
        Error::Series {
            symbol: symbol.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
