use alloc::string::String;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty universe: {0}")]
    EmptyUniverse(&'static str),
    #[error("duplicate quote for {ticker} on {date}")]
    DuplicateQuote { ticker: String, date: NaiveDate },
    #[error("series for {ticker} has no close on the first calendar date")]
    NotCompletable { ticker: String },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("no share count for {ticker} on or before {date}")]
    MissingShares { ticker: String, date: NaiveDate },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("singular mass matrix: a[{index}] = {value:e}")]
    SingularMass { index: usize, value: f64 },
    #[error("eigensolver did not converge: residual {residual:e} after {iterations} iterations")]
    Convergence { residual: f64, iterations: usize },
    #[error("problem size {n} exceeds the dense limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("only {found} feature points available, {needed} requested")]
    InsufficientFeatures { found: usize, needed: usize },
    #[error("degenerate universe: total market capitalization is {0}")]
    DegenerateUniverse(f64),
    #[error("no price for {ticker} on {date}")]
    MissingPrice { ticker: String, date: NaiveDate },
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("correlation undefined for a constant series")]
    UndefinedCorrelation,
    #[error("beta undefined: market returns have zero variance")]
    UndefinedBeta,
    #[error("series are not aligned: {0}")]
    Alignment(String),
}
