use chrono::NaiveDate;

use crate::series::PriceSeries;
use crate::AnalyticsError;

/// Percent change from the previous observation to the close on
/// `event_date`.
pub fn event_delta(series: &PriceSeries, event_date: NaiveDate) -> Result<f64, AnalyticsError> {
    let i = series
        .observations
        .binary_search_by_key(&event_date, |(d, _)| *d)
        .map_err(|_| AnalyticsError::MissingDate(series.symbol.clone(), event_date))?;
    if i == 0 {
        return Err(AnalyticsError::MissingDate(series.symbol.clone(), event_date));
    }
    Ok((series.observations[i].1 / series.observations[i - 1].1 - 1.0) * 100.0)
}

/// Percent change between the last closes on or before each boundary.
pub fn period_change(series: &PriceSeries, start: NaiveDate, end: NaiveDate) -> Result<f64, AnalyticsError> {
    let at = |d: NaiveDate| {
        series
            .last_index_at_or_before(d)
            .map(|i| series.observations[i].1)
            .ok_or_else(|| AnalyticsError::MissingDate(series.symbol.clone(), d))
    };
    Ok((at(end)? / at(start)? - 1.0) * 100.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub symbol: String,
    pub event_day_pct: f64,
    pub period_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventReport {
    pub event_date: NaiveDate,
    pub window: (NaiveDate, NaiveDate),
    pub rows: Vec<EventRow>,
}

pub fn event_report(
    series: &[PriceSeries],
    event_date: NaiveDate,
    window: (NaiveDate, NaiveDate),
) -> Result<EventReport, AnalyticsError> {
    let mut rows = series
        .iter()
        .map(|s| {
            Ok(EventRow {
                symbol: s.symbol.clone(),
                event_day_pct: event_delta(s, event_date)?,
                period_pct: period_change(s, window.0, window.1)?,
            })
        })
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    rows.sort_by(|a, b| a.symbol.cmp(&b.symbol));
    Ok(EventReport { event_date, window, rows })
}

impl EventReport {
    pub fn to_table(&self) -> String {
        let h1 = format!("{}", self.event_date);
        let h2 = format!("{}..{}", self.window.0, self.window.1);
        let w1 = h1.len().max(8);
        let w2 = h2.len().max(8);
        let mut out = format!("{:<8} {:>w1$} {:>w2$}\n", "asset", h1, h2);
        for r in &self.rows {
            out.push_str(&format!("{:<8} {:>w1$.2} {:>w2$.2}\n", r.symbol, r.event_day_pct, r.period_pct));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("symbol,event_date,event_day_pct,window_start,window_end,period_pct\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.4},{},{},{:.4}\n",
                r.symbol, self.event_date, r.event_day_pct, self.window.0, self.window.1, r.period_pct
            ));
        }
        out
    }
}

/// Per-tick prices: `path[0] = base`, tick 1 applies the event-day move,
/// and a constant drift takes the path to `base·(1 + period)` at
/// `path[horizon]`.
pub fn shock_path(base_price: f64, event_day_pct: f64, period_pct: f64, horizon: usize) -> Result<Vec<f64>, AnalyticsError> {
    if horizon < 2 {
        return Err(AnalyticsError::BadHorizon(horizon));
    }
    let e = 1.0 + event_day_pct / 100.0;
    let p = 1.0 + period_pct / 100.0;
    if !(base_price > 0.0 && e > 0.0 && p > 0.0) {
        return Err(AnalyticsError::BadShock);
    }
    let d = (p / e).powf(1.0 / (horizon - 1) as f64);
    let mut path = Vec::with_capacity(horizon + 1);
    path.push(base_price);
    let first = base_price * e;
    for k in 1..horizon {
        path.push(first * d.powi(k as i32 - 1));
    }
    path.push(base_price * p);
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn series(rows: &[(&str, f64)]) -> PriceSeries {
        PriceSeries::new("X", rows.iter().map(|(s, p)| (d(s), *p)).collect()).unwrap()
    }

    #[test]
    fn event_uses_prior_observation() {
        let s = series(&[("2022-11-10", 100.0), ("2022-11-11", 96.86)]);
        assert!((event_delta(&s, d("2022-11-11")).unwrap() + 3.14).abs() < 1e-9);
        assert!(event_delta(&s, d("2022-11-10")).is_err());
        assert!(event_delta(&s, d("2022-11-12")).is_err());
        let flat = series(&[("2022-11-10", 5.0), ("2022-11-11", 5.0)]);
        assert_eq!(event_delta(&flat, d("2022-11-11")).unwrap(), 0.0);
    }

    #[test]
    fn period_uses_last_close_at_or_before() {
        // friday close carries over the weekend
        let s = series(&[("2022-10-28", 100.0), ("2022-11-29", 120.0), ("2022-11-30", 105.81)]);
        assert!((period_change(&s, d("2022-10-31"), d("2022-11-30")).unwrap() - 5.81).abs() < 1e-9);
        assert_eq!(period_change(&s, d("2022-11-30"), d("2022-11-30")).unwrap(), 0.0);
        assert!(period_change(&s, d("2022-10-01"), d("2022-11-30")).is_err());
    }

    #[test]
    fn shock_endpoints() {
        let p = shock_path(100.0, -3.14, -16.19, 20).unwrap();
        assert_eq!(p.len(), 21);
        assert!((p[1] - 96.86).abs() < 1e-9);
        assert!((p[20] - 83.81).abs() < 1e-9);
        let d = (0.8381f64 / 0.9686).powf(1.0 / 19.0);
        assert!((p[19] * d - 83.81).abs() < 1e-9);
        assert!(shock_path(100.0, 0.0, 0.0, 5).unwrap().iter().all(|v| (*v - 100.0).abs() < 1e-12));
        assert_eq!(shock_path(1.0, 0.0, 0.0, 1), Err(AnalyticsError::BadHorizon(1)));
    }

    #[test]
    fn report_renders() {
        let s = series(&[("2022-10-31", 100.0), ("2022-11-10", 100.0), ("2022-11-11", 99.0), ("2022-11-30", 90.0)]);
        let r = event_report(&[s], d("2022-11-11"), (d("2022-10-31"), d("2022-11-30"))).unwrap();
        assert_eq!(r.to_table(), r.to_table());
        assert!(r.to_table().contains("-1.00"));
        assert!(r.to_csv().contains("X,2022-11-11,-1.0000,2022-10-31,2022-11-30,-10.0000"));
    }
}
