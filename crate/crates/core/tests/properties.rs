use chrono::{Days, NaiveDate};
use load_impact::diagnostics::first_diff_correlation;
use load_impact::features::{piecewise_temperature, week_index, week_index_with, WeekBinning};
use load_impact::impact::{gdp_impact, percentile_sorted, semi_elasticity};
use load_impact::ingest::{aggregate_daily, DailyObservation, DailySeries, HourlyLoadRecord};
use proptest::prelude::*;

fn day(offset: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).unwrap() + Days::new(offset as u64)
}

/// Days of 23-25 hourly records with random quantities.
fn hourly_days() -> impl Strategy<Value = Vec<HourlyLoadRecord>> {
    prop::collection::vec((23usize..=25, prop::collection::vec(0.0f64..5e4, 25)), 1..6).prop_map(
        |days| {
            let mut out = Vec::new();
            for (d, (hours, qs)) in days.into_iter().enumerate() {
                for h in 0..hours {
                    out.push(HourlyLoadRecord {
                        date: day(d as u32 * 3),
                        hour: h as u8,
                        quantity_mwh: qs[h],
                    });
                }
            }
            out
        },
    )
}

proptest! {
    #[test]
    fn daily_totals_ignore_record_order(
        records in hourly_days(),
        perm_seed in any::<u64>(),
    ) {
        let expected = aggregate_daily(&records).unwrap();
        let mut shuffled = records.clone();
        // deterministic shuffle driven by the generated seed
        let mut s = perm_seed | 1;
        for i in (1..shuffled.len()).rev() {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            shuffled.swap(i, (s % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(aggregate_daily(&shuffled).unwrap(), expected.clone());
        for (date, total) in expected {
            let hand: f64 = records.iter().filter(|r| r.date == date).map(|r| r.quantity_mwh).sum();
            prop_assert!((total - hand).abs() <= 1e-9 * hand.max(1.0));
        }
    }

    #[test]
    fn daily_csv_round_trips(
        start in 0u32..10_000,
        values in prop::collection::vec((1e-3f64..1e7, -40.0f64..130.0), 1..40),
    ) {
        let obs: Vec<DailyObservation> = values
            .iter()
            .enumerate()
            .map(|(i, (l, t))| DailyObservation { date: day(start + i as u32), load_mwh: *l, temp_f: *t })
            .collect();
        let s = DailySeries::new(obs).unwrap();
        let text = s.to_csv_string();
        let back = DailySeries::from_csv_reader(text.as_bytes()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn gdp_rescaling_is_linear_and_order_preserving(
        a in -50.0f64..50.0,
        b in -50.0f64..50.0,
        k in -3.0f64..3.0,
        r in 0.1f64..60.0,
        uplift in 1.0f64..1.6,
    ) {
        let g = |x: f64| gdp_impact(x, r, uplift).unwrap();
        prop_assert!((g(a + k * b) - (g(a) + k * g(b))).abs() < 1e-9);
        if a <= b {
            prop_assert!(g(a) <= g(b));
        }
        prop_assert_eq!(g(0.0), 0.0);
    }

    #[test]
    fn first_difference_correlation_is_affine_invariant(
        a in prop::collection::vec(-100.0f64..100.0, 5..20),
        noise in prop::collection::vec(-10.0f64..10.0, 20),
        scale in prop_oneof![0.1f64..10.0, -10.0f64..-0.1],
        shift in -1e3f64..1e3,
    ) {
        let years: Vec<i32> = (1990..1990 + a.len() as i32).collect();
        let xa: Vec<(i32, f64)> = years.iter().zip(&a).map(|(y, v)| (*y, *v)).collect();
        let xb: Vec<(i32, f64)> = years.iter().zip(&a).zip(&noise).map(|((y, v), e)| (*y, v + e)).collect();
        let xc: Vec<(i32, f64)> = xb.iter().map(|(y, v)| (*y, scale * v + shift)).collect();
        if let Ok(base) = first_diff_correlation(&xa, &xb) {
            let moved = first_diff_correlation(&xa, &xc).unwrap();
            prop_assert!((moved - scale.signum() * base).abs() < 1e-8, "{} vs {}", moved, base);
        }
    }

    #[test]
    fn week_index_stays_in_bounds(offset in 0u32..40_000) {
        let d = day(offset);
        let w = week_index(d);
        prop_assert!((1..=52).contains(&w));
        let s = week_index_with(d, WeekBinning::Split53);
        prop_assert!((1..=53).contains(&s));
        if s <= 52 {
            prop_assert_eq!(s, w);
        }
    }

    #[test]
    fn percentiles_are_monotone(
        mut v in prop::collection::vec(-1e3f64..1e3, 1..200),
        q1 in 0.0f64..=1.0,
        q2 in 0.0f64..=1.0,
    ) {
        v.sort_by(f64::total_cmp);
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let (a, b) = (percentile_sorted(&v, lo), percentile_sorted(&v, hi));
        prop_assert!(a <= b);
        prop_assert!(v[0] <= a && b <= v[v.len() - 1]);
    }

    #[test]
    fn hinge_is_continuous_at_the_kink(t in -40.0f64..130.0, k in 30.0f64..90.0) {
        let (lin, hinge) = piecewise_temperature(t, k);
        prop_assert_eq!(lin, t);
        prop_assert_eq!(hinge, (t - k).max(0.0));
    }

    #[test]
    fn semi_elasticity_is_increasing_and_sign_preserving(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        if a < b {
            prop_assert!(semi_elasticity(a) <= semi_elasticity(b));
        }
        prop_assert_eq!(semi_elasticity(a) > 0.0, a > 0.0);
        prop_assert!(semi_elasticity(a) > -100.0);
    }
}
