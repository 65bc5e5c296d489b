mod common;

use common::*;
use load_impact::diagnostics::placebo_test;
use load_impact::features::{Column, ModelVariant, WeekRange};
use load_impact::synthetic::SyntheticSpec;
use load_impact::ErrorClass;

fn pre_weeks() -> WeekRange {
    WeekRange::new(1, 10).unwrap()
}

#[test]
fn rejection_rate_is_nominal_under_the_null() {
    let base = SyntheticSpec {
        treatment_effects: vec![0.0; 22],
        ..SyntheticSpec::default()
    };
    let (mut rejections, mut tests, mut joint) = (0usize, 0usize, 0usize);
    let mut per_week = [0usize; 10];
    for seed in 0..200 {
        let (m, d) = fitted(&base.with_seed(500 + seed), ModelVariant::Autocorrelation);
        let r = placebo_test(&m, d.spec(), pre_weeks(), 0.05).unwrap();
        for (k, w) in r.weeks.iter().enumerate() {
            tests += 1;
            if w.significant {
                rejections += 1;
                per_week[k] += 1;
            }
        }
        if !r.joint.pass {
            joint += 1;
        }
    }
    let rate = rejections as f64 / tests as f64;
    assert!((0.03..=0.07).contains(&rate), "pooled rate {rate}, per week {per_week:?}");
    let joint_rate = joint as f64 / 200.0;
    assert!(joint_rate <= 0.12, "joint rejection rate {joint_rate}");
}

#[test]
fn result_ignores_treatment_coefficients() {
    let (m, d) = fitted(&short_spec(), ModelVariant::Base);
    let a = placebo_test(&m, d.spec(), pre_weeks(), 0.05).unwrap();
    let mut changed = m.clone();
    for j in d.treatment_columns() {
        changed.beta[j] = 5.0 + j as f64;
        changed.covariance[(j, j)] *= 9.0;
    }
    let b = placebo_test(&changed, d.spec(), pre_weeks(), 0.05).unwrap();
    assert_eq!(a, b);
}

#[test]
fn large_pre_treatment_shift_is_detected() {
    let mut effects = vec![0.0; 22];
    effects[1] = -0.2;
    let spec = SyntheticSpec {
        treatment_effects: effects,
        ..SyntheticSpec::default()
    };
    let (m, d) = fitted(&spec, ModelVariant::Base);
    let r = placebo_test(&m, d.spec(), pre_weeks(), 0.05).unwrap();
    assert!(!r.pass);
    assert!(r.weeks[1].significant);
    assert!(!r.joint.pass);
    let table = r.to_table();
    assert!(table.contains("FAIL"));
}

#[test]
fn p_values_use_the_normal_approximation() {
    let (m, d) = fitted(&short_spec(), ModelVariant::Base);
    let r = placebo_test(&m, d.spec(), pre_weeks(), 0.05).unwrap();
    let normal = statrs::distribution::Normal::standard();
    use statrs::distribution::ContinuousCDF;
    for w in &r.weeks {
        let j = m
            .column_index(Column::Interaction {
                week: w.week,
                year: 2020,
            })
            .unwrap();
        let se = m.covariance[(j, j)].sqrt();
        let p = 2.0 * (1.0 - normal.cdf((m.beta[j] / se).abs()));
        assert!((w.p_value - p).abs() < 1e-12);
        assert_eq!(w.significant, p < 0.05);
    }
}

#[test]
fn invalid_requests_are_rejected() {
    let (m, d) = fitted(&short_spec(), ModelVariant::Base);
    let spec = d.spec();
    let overlap = placebo_test(&m, spec, WeekRange::new(5, 12).unwrap(), 0.05).unwrap_err();
    assert_eq!(overlap.class(), ErrorClass::Config);
    let outside = placebo_test(&m, spec, WeekRange::new(1, 30).unwrap(), 0.05).unwrap_err();
    assert_eq!(outside.class(), ErrorClass::Config);
    let alpha = placebo_test(&m, spec, pre_weeks(), 1.5).unwrap_err();
    assert_eq!(alpha.class(), ErrorClass::Config);

    // a model without the week 4 interaction column
    let mut missing = m.clone();
    let j = m
        .column_index(Column::Interaction { week: 4, year: 2020 })
        .unwrap();
    missing.columns[j] = Column::WeekFixedEffect(99);
    let err = placebo_test(&missing, spec, pre_weeks(), 0.05).unwrap_err();
    assert!(err.to_string().contains("week 4"), "{err}");
}
