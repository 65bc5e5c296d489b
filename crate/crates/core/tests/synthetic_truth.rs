mod common;

use common::*;
use load_impact::estimator::fit;
use load_impact::features::{ModelSpec, ModelVariant};
use load_impact::synthetic::{
    generate_series, recovery_study, true_coefficients, StudySettings, SyntheticSpec,
};

fn noiseless() -> SyntheticSpec {
    SyntheticSpec {
        sigma: 0.0,
        phi: 0.0,
        treatment_effects: vec![0.0; 22],
        ..SyntheticSpec::default()
    }
}

#[test]
fn noiseless_series_is_recovered_exactly_by_model_one() {
    let spec = noiseless();
    let d = design(&spec, &ModelSpec::default());
    let m = fit(&d).unwrap();
    let truth = true_coefficients(&spec, &d).unwrap();
    for (j, c) in d.columns().iter().enumerate() {
        assert!(
            (m.beta[j] - truth[j]).abs() < 1e-8,
            "{c}: {} vs {}",
            m.beta[j],
            truth[j]
        );
    }
    assert!((m.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn noiseless_fit_holds_with_treatment_effects() {
    let spec = SyntheticSpec {
        sigma: 0.0,
        ..SyntheticSpec::default()
    };
    let d = design(&spec, &ModelSpec::default());
    let m = fit(&d).unwrap();
    let truth = true_coefficients(&spec, &d).unwrap();
    assert!((&m.beta - &truth).amax() < 1e-8);
}

#[test]
fn week_thirteen_effect_maps_to_true_impact() {
    let mut effects = vec![0.0; 22];
    effects[12] = -0.25;
    let spec = SyntheticSpec {
        treatment_effects: effects,
        ..SyntheticSpec::default()
    };
    let (_, truth) = generate_series(&spec, &holidays(&spec)).unwrap();
    let expected = 100.0 * ((-0.25f64).exp() - 1.0);
    assert!((expected + 22.12).abs() < 0.005);
    let week13: Vec<_> = truth
        .rows
        .iter()
        .filter(|r| r.date >= date("2020-03-25") && r.date <= date("2020-03-31"))
        .collect();
    assert_eq!(week13.len(), 7);
    for r in week13 {
        assert!((r.impact_pct - expected).abs() < 1e-12);
        assert!((r.fitted_mwh / r.counterfactual_mwh - (-0.25f64).exp()).abs() < 1e-12);
    }
    for r in &truth.rows {
        if r.date < date("2020-03-25") || r.date > date("2020-03-31") {
            assert_eq!(r.impact_pct, 0.0);
        }
    }
}

#[test]
fn same_seed_gives_identical_series() {
    let spec = SyntheticSpec::default();
    let h = holidays(&spec);
    let a = generate_series(&spec, &h).unwrap();
    let b = generate_series(&spec, &h).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.0.to_csv_string(), b.0.to_csv_string());
    let c = generate_series(&spec.with_seed(spec.seed + 1), &h).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn true_impacts_do_not_depend_on_noise() {
    let spec = SyntheticSpec::default();
    let h = holidays(&spec);
    let (_, base) = generate_series(&spec, &h).unwrap();
    for other in [
        spec.with_seed(5),
        SyntheticSpec {
            sigma: 0.2,
            phi: -0.3,
            ..spec.clone()
        },
    ] {
        let (_, t) = generate_series(&other, &h).unwrap();
        let a: Vec<f64> = base.rows.iter().map(|r| r.impact_pct).collect();
        let b: Vec<f64> = t.rows.iter().map(|r| r.impact_pct).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn simulated_noise_has_requested_moments() {
    let spec = SyntheticSpec {
        start: date("1990-01-01"),
        ..SyntheticSpec::default()
    };
    let u = spec.error_path();
    let n = u.len() as f64;
    let var = u.iter().map(|v| v * v).sum::<f64>() / n;
    let expected = 0.03f64.powi(2) / (1.0 - 0.36);
    assert!((var / expected - 1.0).abs() < 0.1, "variance ratio {}", var / expected);
    let r1 = lag1_autocorrelation(&u);
    assert!((r1 - 0.6).abs() < 0.05, "lag-1 {r1}");
}

#[test]
fn zero_noise_study_has_zero_bias() {
    let spec = SyntheticSpec {
        sigma: 0.0,
        phi: 0.0,
        start: date("2018-01-01"),
        ..SyntheticSpec::default()
    };
    let settings = StudySettings {
        replications: 3,
        variants: vec![ModelVariant::Base, ModelVariant::Autocorrelation],
        monte_carlo: None,
        ..StudySettings::default()
    };
    let study = recovery_study(&spec, &holidays(&spec), &ModelSpec::default(), &settings).unwrap();
    let summary = study.summary();
    for v in &summary.variants {
        assert_eq!(v.failed, 0, "model {}", v.variant);
        for c in &v.coefficients {
            assert!(c.bias.abs() < 1e-8, "model {} {}: {}", v.variant, c.column, c.bias);
        }
    }

    // without temperature the omitted terms must be zero for an exact fit
    let no_temp = SyntheticSpec {
        temp_linear: 0.0,
        temp_hinge: 0.0,
        ..spec
    };
    let settings = StudySettings {
        variants: vec![ModelVariant::NoTemperature],
        ..settings
    };
    let study =
        recovery_study(&no_temp, &holidays(&no_temp), &ModelSpec::default(), &settings).unwrap();
    for c in &study.summary().variants[0].coefficients {
        assert!(c.bias.abs() < 1e-8, "{}: {}", c.column, c.bias);
    }
}

#[test]
fn study_rejects_unbuildable_design_and_zero_replications() {
    // a treatment-year-only sample fails before any fit is attempted
    let spec = SyntheticSpec {
        start: date("2020-01-01"),
        ..SyntheticSpec::default()
    };
    let settings = StudySettings {
        replications: 1,
        monte_carlo: None,
        ..StudySettings::default()
    };
    assert!(recovery_study(&spec, &holidays(&spec), &ModelSpec::default(), &settings).is_err());
    let settings = StudySettings {
        replications: 0,
        ..settings
    };
    let err = recovery_study(&spec, &holidays(&spec), &ModelSpec::default(), &settings).unwrap_err();
    assert_eq!(err.class(), load_impact::ErrorClass::Config);
}
