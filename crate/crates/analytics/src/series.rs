use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use crate::AnalyticsError;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub symbol: String,
    pub observations: Vec<(NaiveDate, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub symbol: String,
    pub observations: Vec<(NaiveDate, f64)>,
}

impl PriceSeries {
    /// Sorts by date and checks the invariants.
    pub fn new(symbol: impl Into<String>, mut observations: Vec<(NaiveDate, f64)>) -> Result<Self, AnalyticsError> {
        observations.sort_by_key(|(d, _)| *d);
        for w in observations.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(AnalyticsError::DuplicateDate(w[0].0));
            }
        }
        if let Some((d, p)) = observations.iter().find(|(_, p)| !(p.is_finite() && *p > 0.0)) {
            return Err(AnalyticsError::NonPositivePrice { date: *d, price: *p });
        }
        Ok(PriceSeries { symbol: symbol.into(), observations })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.observations.iter().map(|(_, p)| *p).collect()
    }

    /// Observations with `start <= date <= end`.
    pub fn between(&self, start: NaiveDate, end: NaiveDate) -> PriceSeries {
        PriceSeries {
            symbol: self.symbol.clone(),
            observations: self.observations.iter().filter(|(d, _)| *d >= start && *d <= end).copied().collect(),
        }
    }

    pub fn close_on(&self, date: NaiveDate) -> Option<f64> {
        self.observations.binary_search_by_key(&date, |(d, _)| *d).ok().map(|i| self.observations[i].1)
    }

    /// Index of the last observation dated on or before `date`.
    pub fn last_index_at_or_before(&self, date: NaiveDate) -> Option<usize> {
        self.observations.partition_point(|(d, _)| *d <= date).checked_sub(1)
    }
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.observations.iter().map(|(_, r)| *r).collect()
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let head = s.get(..10).unwrap_or(s);
    NaiveDate::parse_from_str(head, "%Y-%m-%d").ok()
}

/// Parses a `date,close` CSV. Header names are matched case-insensitively
/// and other columns are ignored, so vendor exports with `Open,High,…`
/// columns load directly.
pub fn parse_series(symbol: &str, input: impl Read) -> Result<PriceSeries, AnalyticsError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(|e| AnalyticsError::Parse { line: 1, reason: e.to_string() })?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let date_col = col("date").ok_or(AnalyticsError::Parse { line: 1, reason: "no date column".into() })?;
    let close_col = col("close").ok_or(AnalyticsError::Parse { line: 1, reason: "no close column".into() })?;
    let mut obs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| AnalyticsError::Parse { line, reason: e.to_string() })?;
        let date_field = rec.get(date_col).unwrap_or("");
        let date = parse_date(date_field)
            .ok_or_else(|| AnalyticsError::Parse { line, reason: format!("bad date '{date_field}'") })?;
        let close_field = rec.get(close_col).unwrap_or("");
        let close: f64 = close_field
            .parse()
            .map_err(|_| AnalyticsError::Parse { line, reason: format!("bad close '{close_field}'") })?;
        obs.push((date, close));
    }
    PriceSeries::new(symbol, obs)
}

pub fn load_series(path: &Path) -> Result<PriceSeries, AnalyticsError> {
    let symbol = symbol_from_path(path);
    let f = std::fs::File::open(path).map_err(|e| AnalyticsError::Io(format!("{}: {e}", path.display())))?;
    parse_series(&symbol, f)
}

/// `BTC-USD.csv` → `BTC`, `^GSPC.csv` → `GSPC`.
pub fn symbol_from_path(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let stem = stem.trim_start_matches('^');
    stem.strip_suffix("-USD").unwrap_or(stem).to_ascii_uppercase()
}

/// Looks for `SYM.csv`, `SYM-USD.csv` or `^SYM.csv` in `dir`.
pub fn find_series_file(dir: &Path, symbol: &str) -> Option<std::path::PathBuf> {
    [format!("{symbol}.csv"), format!("{symbol}-USD.csv"), format!("^{symbol}.csv")]
        .into_iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
}

/// Prices rebased to the first observation.
pub fn standardize(series: &PriceSeries) -> Result<PriceSeries, AnalyticsError> {
    let first = series.observations.first().ok_or(AnalyticsError::EmptySeries)?.1;
    Ok(PriceSeries {
        symbol: series.symbol.clone(),
        observations: series.observations.iter().map(|(d, p)| (*d, p / first)).collect(),
    })
}

pub fn daily_returns(series: &PriceSeries) -> Result<ReturnSeries, AnalyticsError> {
    if series.len() < 2 {
        return Err(AnalyticsError::TooShort { need: 2, have: series.len() });
    }
    Ok(ReturnSeries {
        symbol: series.symbol.clone(),
        observations: series.observations.windows(2).map(|w| (w[1].0, w[1].1 / w[0].1 - 1.0)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    #[test]
    fn parses_and_sorts() {
        let s = parse_series("X", "date,close\n2022-01-03,3\n2022-01-01,1\n2022-01-02,2\n".as_bytes()).unwrap();
        assert_eq!(s.prices(), [1.0, 2.0, 3.0]);
        assert_eq!(s.observations[0].0, d("2022-01-01"));
    }

    #[test]
    fn vendor_columns() {
        let csv = "Date,Open,High,Low,Close,Adj Close,Volume\n2022-11-10,1,1,1,17586.77,17586.77,5\n";
        let s = parse_series("BTC", csv.as_bytes()).unwrap();
        assert_eq!(s.prices(), [17586.77]);
    }

    #[test]
    fn rejects_bad_rows() {
        let dup = parse_series("X", "date,close\n2022-01-01,1\n2022-01-01,2\n".as_bytes());
        assert_eq!(dup, Err(AnalyticsError::DuplicateDate(d("2022-01-01"))));
        let zero = parse_series("X", "date,close\n2022-01-01,0\n".as_bytes());
        assert!(matches!(zero, Err(AnalyticsError::NonPositivePrice { .. })));
        let junk = parse_series("X", "date,close\nyesterday,1\n".as_bytes());
        assert!(matches!(junk, Err(AnalyticsError::Parse { line: 2, .. })));
        assert!(matches!(parse_series("X", "when,close\n".as_bytes()), Err(AnalyticsError::Parse { line: 1, .. })));
    }

    #[test]
    fn standardize_and_returns() {
        let s = PriceSeries::new(
            "X",
            vec![(d("2022-01-01"), 100.0), (d("2022-01-02"), 110.0), (d("2022-01-03"), 99.0)],
        )
        .unwrap();
        let z = standardize(&s).unwrap();
        let want = [1.0, 1.1, 0.99];
        for (a, b) in z.prices().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let r = daily_returns(&s).unwrap().values();
        assert!((r[0] - 0.10).abs() < 1e-12 && (r[1] + 0.10).abs() < 1e-12);
        assert_eq!(standardize(&PriceSeries::new("X", vec![]).unwrap()), Err(AnalyticsError::EmptySeries));
    }

    #[test]
    fn symbols_from_file_names() {
        assert_eq!(symbol_from_path(Path::new("/d/BTC-USD.csv")), "BTC");
        assert_eq!(symbol_from_path(Path::new("^GSPC.csv")), "GSPC");
        assert_eq!(symbol_from_path(Path::new("doge.csv")), "DOGE");
    }

    #[test]
    fn boundary_lookup() {
        let s = PriceSeries::new("X", vec![(d("2022-10-28"), 1.0), (d("2022-11-01"), 2.0)]).unwrap();
        assert_eq!(s.last_index_at_or_before(d("2022-10-31")), Some(0));
        assert_eq!(s.last_index_at_or_before(d("2022-10-01")), None);
        assert_eq!(s.close_on(d("2022-11-01")), Some(2.0));
    }
}
