mod common;

use chrono::{Datelike, Weekday};
use common::*;
use load_impact::features::{
    build_design_matrix, week_index, Column, ErrorModel, ModelSpec, ModelVariant, WeekRange,
};
use load_impact::ingest::{DailyObservation, DailySeries, HolidayCalendar, HolidayCategory};
use load_impact::synthetic::SyntheticSpec;

fn value(d: &load_impact::features::DesignMatrix, date: &str, col: Column) -> f64 {
    let i = d.dates().iter().position(|x| *x == common::date(date)).unwrap();
    d.x()[(i, d.column_index(col).unwrap())]
}

#[test]
fn full_sample_has_eighty_four_columns() {
    let d = design(&SyntheticSpec::default(), &ModelSpec::default());
    assert_eq!(d.nrows(), 1978);
    assert_eq!(d.ncols(), 84);
    let fe = d
        .columns()
        .iter()
        .filter(|c| matches!(c, Column::WeekFixedEffect(_)))
        .count();
    let inter = d
        .columns()
        .iter()
        .filter(|c| matches!(c, Column::Interaction { .. }))
        .count();
    assert_eq!((fe, inter), (51, 22));
    assert_eq!(d.treatment_columns().len(), 12);
}

#[test]
fn interaction_columns_count_treatment_year_days() {
    let spec = SyntheticSpec {
        start: date("2019-01-01"),
        ..SyntheticSpec::default()
    };
    let d = design(&spec, &ModelSpec::default());
    for week in 1..=22u32 {
        let j = d
            .column_index(Column::Interaction { week, year: 2020 })
            .unwrap();
        let days = d.x().column(j).sum();
        let expected = if week == 22 { 5.0 } else { 7.0 };
        assert_eq!(days, expected, "week {week}");
        // every active row is a 2020 date in that week
        for (i, date) in d.dates().iter().enumerate() {
            let on = d.x()[(i, j)] == 1.0;
            assert_eq!(on, date.year() == 2020 && week_index(*date) == week);
        }
    }
}

#[test]
fn baseline_row_has_no_dummies() {
    let spec = SyntheticSpec {
        start: date("2019-01-01"),
        ..SyntheticSpec::default()
    };
    let d = design(&spec, &ModelSpec::default());
    // Monday 2019-01-07, week 1, not a holiday
    for (j, c) in d.columns().iter().enumerate() {
        let i = d.dates().iter().position(|x| *x == date("2019-01-07")).unwrap();
        match c {
            Column::Intercept | Column::Temperature | Column::TemperatureHinge => {}
            _ => assert_eq!(d.x()[(i, j)], 0.0, "{c}"),
        }
    }
}

#[test]
fn sunday_holiday_in_week_thirteen() {
    let spec = SyntheticSpec {
        start: date("2019-01-01"),
        ..SyntheticSpec::default()
    };
    let (series, _) = simulate(&spec);
    let mut h = HolidayCalendar::italian(2019, 2020);
    h.insert(date("2020-03-29"), HolidayCategory::Major).unwrap();
    let d = build_design_matrix(&series, &h, &ModelSpec::default()).unwrap();
    assert_eq!(date("2020-03-29").weekday(), Weekday::Sun);
    assert_eq!(value(&d, "2020-03-29", Column::Weekday(Weekday::Sun)), 1.0);
    assert_eq!(value(&d, "2020-03-29", Column::HolidayMajor), 1.0);
    assert_eq!(value(&d, "2020-03-29", Column::HolidayMinor), 0.0);
    assert_eq!(
        value(&d, "2020-03-29", Column::Interaction { week: 13, year: 2020 }),
        1.0
    );
    assert_eq!(value(&d, "2020-03-29", Column::WeekFixedEffect(13)), 1.0);
}

#[test]
fn temperature_columns_follow_the_hinge() {
    let spec = short_spec();
    let (series, h) = simulate(&spec);
    let d = build_design_matrix(&series, &h, &ModelSpec::default()).unwrap();
    let t = d.column_index(Column::Temperature).unwrap();
    let k = d.column_index(Column::TemperatureHinge).unwrap();
    for (i, o) in series.iter().enumerate() {
        assert_eq!(d.x()[(i, t)], o.temp_f);
        assert_eq!(d.x()[(i, k)], (o.temp_f - 62.0).max(0.0));
        assert_eq!(d.y()[i], o.load_mwh.ln());
    }
}

#[test]
fn construction_is_deterministic() {
    let spec = short_spec();
    let (series, h) = simulate(&spec);
    let a = build_design_matrix(&series, &h, &ModelSpec::default()).unwrap();
    let b = build_design_matrix(&series, &h, &ModelSpec::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv_string(), b.to_csv_string());
}

#[test]
fn dropping_temperature_matches_direct_build() {
    let spec = short_spec();
    let (series, h) = simulate(&spec);
    let full = build_design_matrix(&series, &h, &ModelSpec::default()).unwrap();
    let direct = build_design_matrix(
        &series,
        &h,
        &ModelVariant::NoTemperature.apply(&ModelSpec::default()),
    )
    .unwrap();
    assert_eq!(full.without_temperature(), direct);
    assert_eq!(full.for_variant(ModelVariant::NoTemperature), direct);
    let ar = full.for_variant(ModelVariant::Autocorrelation);
    assert_eq!(ar.spec().error_model, ErrorModel::Ar1);
    assert_eq!(ar.x(), full.x());
}

#[test]
fn treatment_year_only_sample_is_collinear() {
    let spec = SyntheticSpec {
        start: date("2020-01-01"),
        ..SyntheticSpec::default()
    };
    let (series, h) = simulate(&spec);
    let err = build_design_matrix(&series, &h, &ModelSpec::default()).unwrap_err();
    assert_eq!(err.class(), load_impact::ErrorClass::Numerical);
    assert!(err.to_string().contains("week_"), "{err}");
}

#[test]
fn interaction_weeks_outside_sample_are_skipped() {
    // the sample ends in week 9 of 2020, so only nine interaction columns exist
    let spec = SyntheticSpec {
        start: date("2019-01-01"),
        end: date("2020-02-29"),
        treatment_effects: vec![0.0; 22],
        ..SyntheticSpec::default()
    };
    let model = ModelSpec {
        interaction_weeks: WeekRange::new(1, 22).unwrap(),
        ..ModelSpec::default()
    };
    let d = design(&spec, &model);
    let weeks: Vec<u32> = d
        .columns()
        .iter()
        .filter_map(|c| match c {
            Column::Interaction { week, .. } => Some(*week),
            _ => None,
        })
        .collect();
    assert_eq!(weeks, (1..=9).collect::<Vec<_>>());
    assert!(d.treatment_columns().is_empty());
}

#[test]
fn single_day_series_cannot_be_fitted() {
    let s = DailySeries::new(vec![DailyObservation {
        date: date("2019-06-03"),
        load_mwh: 800_000.0,
        temp_f: 70.0,
    }])
    .unwrap();
    let err = build_design_matrix(&s, &HolidayCalendar::new(), &ModelSpec::default()).unwrap_err();
    assert_ne!(err.class(), load_impact::ErrorClass::Config);
}
