use std::collections::BTreeMap;

use crate::series::ReturnSeries;
use crate::AnalyticsError;

/// Sample standard deviation (divisor `n - 1`).
pub fn std_dev(xs: &[f64]) -> Result<f64, AnalyticsError> {
    if xs.len() < 2 {
        return Err(AnalyticsError::TooShort { need: 2, have: xs.len() });
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    Ok((ss / (n - 1.0)).sqrt())
}

pub fn volatility(returns: &ReturnSeries) -> Result<f64, AnalyticsError> {
    std_dev(&returns.values())
}

/// Inner join on date.
pub fn align(a: &ReturnSeries, b: &ReturnSeries) -> Result<Vec<(f64, f64)>, AnalyticsError> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let (da, ra) = a.observations[i];
        let (db, rb) = b.observations[j];
        match da.cmp(&db) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((ra, rb));
                i += 1;
                j += 1;
            }
        }
    }
    if out.is_empty() {
        return Err(AnalyticsError::NoOverlap(a.symbol.clone(), b.symbol.clone()));
    }
    Ok(out)
}

pub fn pearson(pairs: &[(f64, f64)]) -> Result<f64, AnalyticsError> {
    if pairs.len() < 3 {
        return Err(AnalyticsError::TooShort { need: 3, have: pairs.len() });
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn correlation(a: &ReturnSeries, b: &ReturnSeries) -> Result<f64, AnalyticsError> {
    pearson(&align(a, b)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub symbols: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.symbols.iter().position(|s| s == a)?;
        let j = self.symbols.iter().position(|s| s == b)?;
        Some(self.entries[i][j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("symbol,{}\n", self.symbols.join(","));
        for (s, row) in self.symbols.iter().zip(&self.entries) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            out.push_str(&format!("{s},{}\n", cells.join(",")));
        }
        out
    }
}

/// Pairwise-aligned matrix with symbols in ascending order.
pub fn correlation_matrix(series: &[ReturnSeries]) -> Result<CorrelationMatrix, AnalyticsError> {
    let by_symbol: BTreeMap<&str, &ReturnSeries> = series.iter().map(|s| (s.symbol.as_str(), s)).collect();
    let symbols: Vec<String> = by_symbol.keys().map(|s| s.to_string()).collect();
    let list: Vec<&ReturnSeries> = by_symbol.into_values().collect();
    let n = list.len();
    let mut entries = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let c = correlation(list[i], list[j])?;
            entries[i][j] = c;
            entries[j][i] = c;
        }
    }
    Ok(CorrelationMatrix { symbols, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Days, NaiveDate};

    fn series(sym: &str, start: &str, step: u64, vals: &[f64]) -> ReturnSeries {
        let d0: NaiveDate = start.parse().unwrap();
        ReturnSeries {
            symbol: sym.into(),
            observations: vals.iter().enumerate().map(|(i, v)| (d0 + Days::new(i as u64 * step), *v)).collect(),
        }
    }

    #[test]
    fn volatility_closed_form() {
        let r = series("X", "2022-01-01", 1, &[0.01, -0.01]);
        assert!((volatility(&r).unwrap() - 0.000_2f64.sqrt()).abs() < 1e-15);
        assert_eq!(volatility(&series("X", "2022-01-01", 1, &[0.02; 5])).unwrap(), 0.0);
        assert!(volatility(&series("X", "2022-01-01", 1, &[0.02])).is_err());
    }

    #[test]
    fn week_alignment() {
        // 2022-01-03 is a Monday
        let crypto = series("BTC", "2022-01-03", 1, &[0.1; 7]);
        let weekdays: Vec<(NaiveDate, f64)> =
            crypto.observations.iter().take(5).map(|(d, _)| (*d, 0.2)).collect();
        let equity = ReturnSeries { symbol: "GSPC".into(), observations: weekdays };
        assert_eq!(align(&crypto, &equity).unwrap().len(), 5);
        let later = series("Y", "2023-01-01", 1, &[0.1; 3]);
        assert!(matches!(align(&crypto, &later), Err(AnalyticsError::NoOverlap(..))));
    }

    #[test]
    fn correlation_extremes() {
        let a = series("A", "2022-01-01", 1, &[0.01, -0.02, 0.03, 0.0, 0.05]);
        let neg = series("B", "2022-01-01", 1, &[-0.01, 0.02, -0.03, 0.0, -0.05]);
        assert!((correlation(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((correlation(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        let flat = series("C", "2022-01-01", 1, &[0.0; 5]);
        assert_eq!(correlation(&a, &flat), Err(AnalyticsError::ZeroVariance));
    }

    #[test]
    fn matrix_shape() {
        let a = series("B", "2022-01-01", 1, &[0.01, -0.02, 0.03, 0.0]);
        let b = series("A", "2022-01-01", 1, &[0.02, -0.01, 0.01, 0.01]);
        let m = correlation_matrix(&[a, b]).unwrap();
        assert_eq!(m.symbols, ["A", "B"]);
        assert_eq!(m.entries[0][1], m.entries[1][0]);
        assert!(m.to_csv().starts_with("symbol,A,B\nA,1.0000,"));
    }
}
