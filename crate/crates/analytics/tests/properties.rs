use chrono::{Days, NaiveDate};
use deedchain_analytics::*;
use proptest::prelude::*;

fn day(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2022, 1, 1).unwrap() + Days::new(i as u64)
}

fn prices() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.5f64..2.0, 4..60).prop_map(|moves| {
        let mut p = 100.0;
        moves
            .into_iter()
            .map(|m| {
                p *= m;
                p
            })
            .collect()
    })
}

fn series(sym: &str, ps: &[f64]) -> PriceSeries {
    PriceSeries::new(sym, ps.iter().enumerate().map(|(i, p)| (day(i), *p)).collect()).unwrap()
}

fn two_pass(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mut mean = 0.0;
    for x in xs {
        mean += x;
    }
    mean /= n;
    let mut ss = 0.0;
    for x in xs {
        ss += (x - mean) * (x - mean);
    }
    (ss / (n - 1.0)).sqrt()
}

proptest! {
    #[test]
    fn matrix_is_symmetric_with_unit_diagonal(a in prices(), b in prices(), c in prices()) {
        let rs: Vec<ReturnSeries> = [("A", &a), ("B", &b), ("C", &c)]
            .iter()
            .map(|(s, p)| daily_returns(&series(s, p)).unwrap())
            .collect();
        if let Ok(m) = correlation_matrix(&rs) {
            for i in 0..3 {
                prop_assert_eq!(m.entries[i][i], 1.0);
                for j in 0..3 {
                    prop_assert_eq!(m.entries[i][j], m.entries[j][i]);
                    prop_assert!((-1.0..=1.0).contains(&m.entries[i][j]));
                }
            }
        }
    }

    #[test]
    fn correlation_is_affine_invariant(a in prices(), b in prices(), scale in 0.1f64..10.0, shift in -1.0f64..1.0) {
        let ra = daily_returns(&series("A", &a)).unwrap();
        let rb = daily_returns(&series("B", &b)).unwrap();
        let mut moved = rb.clone();
        for o in &mut moved.observations {
            o.1 = o.1 * scale + shift;
        }
        if let (Ok(x), Ok(y)) = (correlation(&ra, &rb), correlation(&ra, &moved)) {
            prop_assert!((x - y).abs() < 1e-9, "{} vs {}", x, y);
        }
    }

    #[test]
    fn standardize_is_idempotent(a in prices()) {
        let s = standardize(&series("A", &a)).unwrap();
        let t = standardize(&s).unwrap();
        for (x, y) in s.prices().iter().zip(t.prices()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert_eq!(s.prices()[0], 1.0);
    }

    #[test]
    fn volatility_matches_two_pass(a in prices()) {
        let r = daily_returns(&series("A", &a)).unwrap();
        prop_assert!((volatility(&r).unwrap() - two_pass(&r.values())).abs() < 1e-12);
    }

    #[test]
    fn period_change_composes_returns(a in prices(), i in 0usize..100, j in 0usize..100) {
        let s = series("A", &a);
        let (lo, hi) = (i.min(j) % a.len(), i.max(j) % a.len());
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let r = daily_returns(&s).unwrap().values();
        let compounded: f64 = r[lo..hi].iter().map(|x| 1.0 + x).product::<f64>() - 1.0;
        let pc = period_change(&s, day(lo), day(hi)).unwrap() / 100.0;
        prop_assert!((pc - compounded).abs() < 1e-12 * (1.0 + compounded.abs()) * 10.0);
        if hi > 0 {
            let ed = event_delta(&s, day(hi)).unwrap() / 100.0;
            prop_assert!((ed - r[hi - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn shock_path_endpoints(base in 0.01f64..1e6, e in -50.0f64..50.0, p in -50.0f64..50.0, h in 2usize..200) {
        let path = shock_path(base, e, p, h).unwrap();
        prop_assert_eq!(path.len(), h + 1);
        prop_assert!((path[1] / (base * (1.0 + e / 100.0)) - 1.0).abs() < 1e-12);
        let d = ((1.0 + p / 100.0) / (1.0 + e / 100.0)).powf(1.0 / (h - 1) as f64);
        let recomputed = base * (1.0 + e / 100.0) * d.powi(h as i32 - 1);
        prop_assert!((recomputed / path[h] - 1.0).abs() < 1e-9);
    }
}
