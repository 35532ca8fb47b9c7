use chrono::{Days, NaiveDate};
use proptest::prelude::*;
use svarlingam::ingest::{align_panel, column_stats, compute_cer, slice_period, weekend_fill, RawSeries};
use svarlingam::{Error, Panel};

fn day(offset: u64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 1, 2).unwrap() + Days::new(offset)
}

/// Sparse positive series: distinct day offsets in 0..60 with prices in (0.5, 2).
fn series_strategy(name: &'static str) -> impl Strategy<Value = RawSeries> {
    prop::collection::btree_map(0u64..60, 0.5f64..2.0, 1..40).prop_map(move |m| {
        RawSeries::new(name, m.into_iter().map(|(d, v)| (day(d), v)).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn weekend_fill_is_idempotent(s in series_strategy("x"), extra in 0u64..10) {
        let start = s.points[0].0;
        let end = s.points.last().unwrap().0 + Days::new(extra);
        let once = weekend_fill(&s, start, end).unwrap();
        let twice = weekend_fill(&once, start, end).unwrap();
        prop_assert_eq!(&once, &twice);
        // Every calendar day is present and observed values are untouched.
        prop_assert_eq!(once.len() as i64, (end - start).num_days() + 1);
        for &(d, v) in &s.points {
            let got = once.points.iter().find(|p| p.0 == d).unwrap().1;
            prop_assert_eq!(got, v);
        }
    }

    #[test]
    fn cer_of_a_series_with_itself_is_one(s in series_strategy("x")) {
        let cer = compute_cer(&s, &s).unwrap();
        prop_assert_eq!(cer.len(), s.len());
        prop_assert!(cer.points.iter().all(|p| p.1 == 1.0));
    }

    #[test]
    fn align_uses_the_date_intersection(a in series_strategy("a"), b in series_strategy("b")) {
        let common: Vec<NaiveDate> = a.dates().filter(|d| b.dates().any(|e| e == *d)).collect();
        match align_panel(&[a.clone(), b.clone()]) {
            Ok(p) => {
                prop_assert_eq!(&p.dates, &common);
                for (i, d) in common.iter().enumerate() {
                    let va = a.points.iter().find(|q| q.0 == *d).unwrap().1;
                    let vb = b.points.iter().find(|q| q.0 == *d).unwrap().1;
                    prop_assert_eq!(p.values[(i, 0)], va);
                    prop_assert_eq!(p.values[(i, 1)], vb);
                }
            }
            Err(e) => {
                prop_assert!(common.is_empty());
                prop_assert!(matches!(e, Error::Alignment(_)));
            }
        }
    }

    #[test]
    fn stats_ignore_row_order(mut x in prop::collection::vec(-10.0f64..10.0, 2..50), seed in any::<u64>()) {
        let a = column_stats("x", &x).unwrap();
        // Deterministic shuffle.
        let mut s = seed;
        for i in (1..x.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            x.swap(i, (s >> 33) as usize % (i + 1));
        }
        let b = column_stats("x", &x).unwrap();
        prop_assert_eq!(a.min, b.min);
        prop_assert_eq!(a.q1, b.q1);
        prop_assert_eq!(a.median, b.median);
        prop_assert_eq!(a.q3, b.q3);
        prop_assert_eq!(a.max, b.max);
        for (u, v) in [(a.mean, b.mean), (a.sd, b.sd), (a.skewness, b.skewness), (a.kurtosis, b.kurtosis)] {
            prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
        }
        prop_assert!(a.min <= a.q1 && a.q1 <= a.median && a.median <= a.q3 && a.q3 <= a.max);
        prop_assert!(a.sd >= 0.0);
    }

    #[test]
    fn nested_slices_compose(a in 0u64..40, b in 0u64..40, c in 0u64..40, d in 0u64..40) {
        let values = nalgebra::DMatrix::from_fn(30, 2, |i, j| (i * 2 + j) as f64);
        let panel = Panel::with_daily_index(vec!["u".into(), "v".into()], day(5), values).unwrap();
        let (a, b) = (day(a.min(b)), day(a.max(b)));
        let (c, d) = (day(c.min(d)), day(c.max(d)));
        let twice = slice_period(&panel, a, b).and_then(|p| slice_period(&p, c, d));
        let (lo, hi) = (a.max(c), b.min(d));
        let once = if lo <= hi { slice_period(&panel, lo, hi) } else { Err(Error::EmptySlice { start: lo, end: hi }) };
        match (twice, once) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "mismatch: {:?} vs {:?}", x.is_ok(), y.is_ok()),
        }
    }
}

#[test]
fn full_range_slice_is_identity() {
    let values = nalgebra::DMatrix::from_fn(10, 2, |i, j| (i + j) as f64);
    let panel = Panel::with_daily_index(vec!["u".into(), "v".into()], day(0), values).unwrap();
    assert_eq!(slice_period(&panel, day(0), day(9)).unwrap(), panel);
    assert!(matches!(slice_period(&panel, day(20), day(30)), Err(Error::EmptySlice { .. })));
}
