use std::path::{Path, PathBuf};

use load_impact::config::RunConfig;
use load_impact::features::ModelVariant;
use load_impact::ingest::DailySeries;
use load_impact::pipeline::{
    cmd_fit, cmd_impact, cmd_ingest, cmd_simulate, fit_variant, load_inputs, SimulateConfig,
};
use load_impact::report::ModelDocument;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn run_config() -> RunConfig {
    let mut cfg = RunConfig::load(&fixture_dir().join("run.toml")).unwrap();
    cfg.draws = 300;
    cfg
}

#[test]
fn committed_bundle_matches_generator() {
    let cfg = SimulateConfig::load(&fixture_dir().join("fixture.toml")).unwrap();
    assert_eq!(cfg.replications, 0);
    let out = cmd_simulate(&cfg).unwrap();
    assert_eq!(out.files.len(), 7);
    for (name, content) in &out.files {
        let committed = std::fs::read_to_string(fixture_dir().join(name)).unwrap();
        assert!(committed == *content, "{name} differs from the generator output");
    }
}

#[test]
fn ingest_reproduces_the_simulated_series() {
    let out = cmd_ingest(&run_config()).unwrap();
    let daily = DailySeries::from_csv_reader(out.get("daily.csv").unwrap().as_bytes()).unwrap();
    let truth_text = std::fs::read_to_string(fixture_dir().join("synthetic_daily.csv")).unwrap();
    let truth = DailySeries::from_csv_reader(truth_text.as_bytes()).unwrap();
    assert_eq!(daily.len(), 517);
    for (a, b) in daily.iter().zip(truth.iter()) {
        assert_eq!(a.date, b.date);
        // hourly values carry three decimals
        assert!((a.load_mwh - b.load_mwh).abs() <= 25.0 * 5e-4 + 1e-6, "{}", a.date);
        // station files carry two decimals, one of them in Celsius
        assert!((a.temp_f - b.temp_f).abs() <= 0.02, "{}", a.date);
    }
    let report: serde_json::Value =
        serde_json::from_str(out.get("ingest_report.json").unwrap()).unwrap();
    assert_eq!(report["days"], 517);
    assert_eq!(
        report["short_days"],
        serde_json::json!(["2019-03-31", "2020-03-29"])
    );
    assert_eq!(report["long_days"], serde_json::json!(["2019-10-27"]));
}

#[test]
fn model_document_round_trips_exactly() {
    let cfg = run_config();
    let inputs = load_inputs(&cfg).unwrap();
    for v in [
        ModelVariant::Base,
        ModelVariant::NoTemperature,
        ModelVariant::Autocorrelation,
    ] {
        let (doc, design) = fit_variant(&cfg, &inputs, v).unwrap();
        let model = load_impact::estimator::fit(&design).unwrap();
        let back = ModelDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_model().unwrap(), model);
    }
}

#[test]
fn impact_from_saved_document_matches_fresh_fit() {
    let cfg = run_config();
    let out = cmd_fit(&cfg, ModelVariant::Autocorrelation, true).unwrap();
    let doc = ModelDocument::from_json(out.get("model_3.json").unwrap()).unwrap();
    assert!(out.get("design_model_3.csv").is_some());
    let table = out.get("coefficients_model_3.txt").unwrap();
    assert!(table.lines().any(|l| l.starts_with("phi")));

    let inputs = load_inputs(&cfg).unwrap();
    let (fresh, _) = fit_variant(&cfg, &inputs, ModelVariant::Autocorrelation).unwrap();
    let a = cmd_impact(&cfg, &doc).unwrap();
    let b = cmd_impact(&cfg, &fresh).unwrap();
    assert_eq!(a.files, b.files);

    let daily = a.get("impact_daily.csv").unwrap();
    for line in daily.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[0] < "2020-03-11" {
            assert_eq!(f[3], "0", "{line}");
        }
    }
    let periods = a.get("impact_periods.csv").unwrap();
    assert!(periods.starts_with("period,electricity_pct,ci,gdp1_pct,ci,gdp2_pct,ci,preferred"));
    assert!(periods.contains("\nMarch,") && periods.contains("gdp2") && periods.contains("gdp1"));
}
