use std::path::Path;

use chrono::NaiveDate;
use deedchain_analytics::{
    correlation_matrix, daily_returns, event_report, find_series_file, load_series, volatility, CorrelationMatrix,
    EventReport, PriceSeries,
};

use crate::CliError;

pub const DEFAULT_SYMBOLS: [&str; 6] = ["BTC", "DOGE", "ETH", "USDT", "XRP", "GSPC"];

pub fn date(s: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| CliError::Usage(format!("bad date '{s}'")))
}

/// `start,end`.
pub fn window(s: &str) -> Result<(NaiveDate, NaiveDate), CliError> {
    let (a, b) = s.split_once(',').ok_or_else(|| CliError::Usage(format!("window '{s}' is not start,end")))?;
    let (a, b) = (date(a)?, date(b)?);
    if a > b {
        return Err(CliError::Usage(format!("window '{s}' ends before it starts")));
    }
    Ok((a, b))
}

pub fn year_2022() -> (NaiveDate, NaiveDate) {
    (NaiveDate::from_ymd_opt(2022, 1, 1).unwrap(), NaiveDate::from_ymd_opt(2022, 12, 31).unwrap())
}

pub fn november_2022() -> (NaiveDate, NaiveDate) {
    (NaiveDate::from_ymd_opt(2022, 10, 31).unwrap(), NaiveDate::from_ymd_opt(2022, 11, 30).unwrap())
}

pub fn ftx_event_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 11, 11).unwrap()
}

pub fn load_symbols(dir: &Path, symbols: &[&str]) -> Result<Vec<PriceSeries>, CliError> {
    symbols
        .iter()
        .map(|s| {
            let path = find_series_file(dir, s)
                .ok_or_else(|| CliError::Data(format!("no {s}.csv, {s}-USD.csv or ^{s}.csv in {}", dir.display())))?;
            let mut series = load_series(&path)?;
            series.symbol = s.to_string();
            Ok(series)
        })
        .collect()
}

/// Percent daily-return standard deviation per symbol over `range`.
pub fn volatilities(series: &[PriceSeries], range: (NaiveDate, NaiveDate)) -> Result<Vec<(String, f64)>, CliError> {
    series
        .iter()
        .map(|s| Ok((s.symbol.clone(), volatility(&daily_returns(&s.between(range.0, range.1))?)? * 100.0)))
        .collect()
}

pub fn correlations(series: &[PriceSeries], range: (NaiveDate, NaiveDate)) -> Result<CorrelationMatrix, CliError> {
    let returns = series
        .iter()
        .map(|s| daily_returns(&s.between(range.0, range.1)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(correlation_matrix(&returns)?)
}

pub fn events(series: &[PriceSeries], event: NaiveDate, window: (NaiveDate, NaiveDate)) -> Result<EventReport, CliError> {
    Ok(event_report(series, event, window)?)
}

pub fn volatility_table(rows: &[(String, f64)]) -> String {
    let mut out = format!("{:<8} {:>10}\n", "asset", "vol %");
    for (s, v) in rows {
        out.push_str(&format!("{s:<8} {v:>10.2}\n"));
    }
    out
}

pub fn volatility_csv(rows: &[(String, f64)]) -> String {
    let mut out = String::from("symbol,volatility_pct\n");
    for (s, v) in rows {
        out.push_str(&format!("{s},{v:.4}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows() {
        assert_eq!(window("2022-10-31,2022-11-30").unwrap(), november_2022());
        assert!(window("2022-11-30,2022-10-31").is_err());
        assert!(window("2022-10-31").is_err());
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_symbols(dir.path(), &["BTC"]), Err(CliError::Data(_))));
        std::fs::write(dir.path().join("BTC-USD.csv"), "Date,Close\n2022-01-01,1\n2022-01-02,2\n2022-01-03,1\n").unwrap();
        let s = load_symbols(dir.path(), &["BTC"]).unwrap();
        assert_eq!(s[0].symbol, "BTC");
        let v = volatilities(&s, year_2022()).unwrap();
        assert!((v[0].1 - 106.066).abs() < 1e-2);
    }
}
