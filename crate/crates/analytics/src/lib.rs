//! Price-series analytics: standardized prices, simple daily returns,
//! volatility, Pearson correlations, event-day and period deltas, and
//! synthetic shock paths.

use chrono::NaiveDate;
use thiserror::Error;

pub mod event;
pub mod series;
pub mod stats;

pub use event::{event_delta, event_report, period_change, shock_path, EventReport, EventRow};
pub use series::{daily_returns, find_series_file, load_series, parse_series, standardize, PriceSeries, ReturnSeries};
pub use stats::{align, correlation, correlation_matrix, pearson, volatility, CorrelationMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("i/o: {0}")]
    Io(String),
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("non-positive price {price} on {date}")]
    NonPositivePrice { date: NaiveDate, price: f64 },
    #[error("empty series")]
    EmptySeries,
    #[error("need at least {need} observations, have {have}")]
    TooShort { need: usize, have: usize },
    #[error("{0} and {1} share no dates")]
    NoOverlap(String, String),
    #[error("zero variance")]
    ZeroVariance,
    #[error("{0} has no close for {1}")]
    MissingDate(String, NaiveDate),
    #[error("horizon {0} is below 2")]
    BadHorizon(usize),
    #[error("shock moves price to zero or below")]
    BadShock,
}
