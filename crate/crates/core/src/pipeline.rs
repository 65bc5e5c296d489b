//! Command implementations. Each returns its output files as strings so
//! callers can write them, compare them, or test them without touching disk.

use std::collections::BTreeSet;
use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::config::RunConfig;
use crate::diagnostics::{descriptive_exports, placebo_test, ExportConfig, PlaceboReport};
use crate::error::{Error, Result};
use crate::estimator::fit;
use crate::features::{build_design_matrix, DesignMatrix, ModelVariant};
use crate::impact::{gdp_impacts, monte_carlo_ci, period_report_csv, standard_periods, GdpImpact};
use crate::ingest::{
    aggregate_daily, average_station_temps, merge_series, parse_hourly_load, parse_temperature,
    DailySeries, HolidayCalendar,
};
use crate::report::{coefficient_table, ModelDocument};
use crate::synthetic::{fixture_bundle, generate_series, recovery_study, StudySettings, SyntheticSpec};

/// Named output files, in the order they were produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    pub fn push(&mut self, name: impl Into<String>, content: impl Into<String>) {
        self.files.push((name.into(), content.into()));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    pub fn extend(&mut self, other: Outputs) {
        self.files.extend(other.files);
    }

    /// Writes every file under `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, content) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// What ingest found in the raw inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub days: usize,
    pub hourly_records: Option<usize>,
    /// Days with 23 recorded hours.
    pub short_days: Vec<NaiveDate>,
    /// Days with 25 recorded hours.
    pub long_days: Vec<NaiveDate>,
    pub temperature_stations: usize,
    /// Days whose temperature was filled by interpolation.
    pub filled_temperature_days: Vec<NaiveDate>,
    pub holidays_in_span: usize,
    pub min_load_mwh: f64,
    pub max_load_mwh: f64,
    pub min_temp_f: f64,
    pub max_temp_f: f64,
}

/// Validated inputs of a run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub series: DailySeries,
    pub holidays: HolidayCalendar,
    pub report: IngestReport,
}

/// Reads and validates the configured inputs.
pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    cfg.check_inputs_exist()?;
    let holidays = match &cfg.holidays_path {
        Some(p) => HolidayCalendar::from_csv_reader(open(p)?)?,
        None => {
            return Err(Error::Config("holidays_path is required".into()));
        }
    };

    let mut hourly_records = None;
    let mut short_days = Vec::new();
    let mut long_days = Vec::new();
    let mut filled = Vec::new();
    let series = if let Some(p) = &cfg.daily_path {
        let s = DailySeries::from_csv_reader(open(p)?)?;
        restrict(s, cfg.start, cfg.end)?
    } else {
        let load_path = cfg
            .load_path
            .as_ref()
            .ok_or_else(|| Error::Config("load_path or daily_path is required".into()))?;
        let records = parse_hourly_load(open(load_path)?, cfg.hour_convention)?;
        hourly_records = Some(records.len());
        let daily = aggregate_daily(&records)?;
        let mut per_day = std::collections::BTreeMap::<NaiveDate, usize>::new();
        for r in &records {
            *per_day.entry(r.date).or_default() += 1;
        }
        for (d, h) in per_day {
            match h {
                23 => short_days.push(d),
                25 => long_days.push(d),
                _ => {}
            }
        }
        let temps = match cfg.temp_paths.as_slice() {
            [] => return Err(Error::Config("temp_paths needs one or two files".into())),
            [a] => parse_temperature(open(a)?, cfg.temp_unit(0))?,
            [a, b] => average_station_temps(
                &parse_temperature(open(a)?, cfg.temp_unit(0))?,
                &parse_temperature(open(b)?, cfg.temp_unit(1))?,
            )?,
            _ => return Err(Error::Config("at most two temperature files".into())),
        };
        let (first, last) = match (daily.first(), daily.last()) {
            (Some(f), Some(l)) => (f.0, l.0),
            _ => return Err(Error::Data("load file has no records".into())),
        };
        let start = cfg.start.unwrap_or(first);
        let end = cfg.end.unwrap_or(last);
        let known: BTreeSet<NaiveDate> = temps.iter().map(|(d, _)| *d).collect();
        let s = merge_series(&daily, &temps, start, end, cfg.fill_policy)?;
        filled = s.iter().map(|o| o.date).filter(|d| !known.contains(d)).collect();
        s
    };

    let obs = series.observations();
    let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&crate::ingest::DailyObservation) -> f64| {
        obs.iter().map(g).fold(init, f)
    };
    let report = IngestReport {
        start: series.first_date(),
        end: series.last_date(),
        days: series.len(),
        hourly_records,
        short_days,
        long_days,
        temperature_stations: if cfg.daily_path.is_some() { 0 } else { cfg.temp_paths.len() },
        filled_temperature_days: filled,
        holidays_in_span: holidays
            .iter()
            .filter(|(d, _)| *d >= series.first_date() && *d <= series.last_date())
            .count(),
        min_load_mwh: fold(f64::min, f64::INFINITY, |o| o.load_mwh),
        max_load_mwh: fold(f64::max, f64::NEG_INFINITY, |o| o.load_mwh),
        min_temp_f: fold(f64::min, f64::INFINITY, |o| o.temp_f),
        max_temp_f: fold(f64::max, f64::NEG_INFINITY, |o| o.temp_f),
    };
    Ok(Inputs {
        series,
        holidays,
        report,
    })
}

fn restrict(s: DailySeries, start: Option<NaiveDate>, end: Option<NaiveDate>) -> Result<DailySeries> {
    let start = start.unwrap_or(s.first_date());
    let end = end.unwrap_or(s.last_date());
    if start < s.first_date() || end > s.last_date() {
        return Err(Error::Range(format!(
            "requested span {start}..{end} exceeds the daily file {}..{}",
            s.first_date(),
            s.last_date()
        )));
    }
    DailySeries::new(
        s.iter()
            .filter(|o| o.date >= start && o.date <= end)
            .cloned()
            .collect(),
    )
}

/// Canonical daily CSV and the ingest report.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<Outputs> {
    let inputs = load_inputs(cfg)?;
    let mut out = Outputs::default();
    out.push("daily.csv", inputs.series.to_csv_string());
    out.push("ingest_report.json", to_json(&inputs.report)?);
    Ok(out)
}

/// Design matrix of `variant` under the configured spec.
pub fn variant_design(cfg: &RunConfig, inputs: &Inputs, variant: ModelVariant) -> Result<DesignMatrix> {
    let spec = variant.apply(&cfg.model_spec());
    build_design_matrix(&inputs.series, &inputs.holidays, &spec)
}

pub fn fit_variant(
    cfg: &RunConfig,
    inputs: &Inputs,
    variant: ModelVariant,
) -> Result<(ModelDocument, DesignMatrix)> {
    let design = variant_design(cfg, inputs, variant)?;
    let model = fit(&design)?;
    Ok((ModelDocument::new(variant, &model, &design)?, design))
}

/// Fitted-model JSON and its coefficient table; optionally the design matrix.
pub fn cmd_fit(cfg: &RunConfig, variant: ModelVariant, dump_design: bool) -> Result<Outputs> {
    let inputs = load_inputs(cfg)?;
    let (doc, design) = fit_variant(cfg, &inputs, variant)?;
    let n = variant.number();
    let mut out = Outputs::default();
    out.push(format!("model_{n}.json"), doc.to_json()?);
    out.push(
        format!("coefficients_model_{n}.txt"),
        coefficient_table(std::slice::from_ref(&doc)),
    );
    if dump_design {
        out.push(format!("design_model_{n}.csv"), design.to_csv_string());
    }
    Ok(out)
}

/// Rebuilds the design a stored model was fitted on and checks it matches.
pub fn design_for_document(inputs: &Inputs, doc: &ModelDocument) -> Result<DesignMatrix> {
    let design = build_design_matrix(&inputs.series, &inputs.holidays, &doc.spec)?;
    let names: Vec<String> = design.columns().iter().map(|c| c.name()).collect();
    if names != doc.columns {
        return Err(Error::Alignment(
            "model document columns do not match the design built from the inputs".into(),
        ));
    }
    Ok(design)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PeriodReport<'a> {
    model: u8,
    draws: usize,
    seed: u64,
    ci_level: f64,
    aggregation: crate::impact::Aggregation,
    periods: &'a [GdpImpact],
}

/// Daily impact CSV with intervals and the period table (CSV and JSON).
pub fn cmd_impact(cfg: &RunConfig, doc: &ModelDocument) -> Result<Outputs> {
    let inputs = load_inputs(cfg)?;
    impact_outputs(cfg, &inputs, doc)
}

pub fn impact_outputs(cfg: &RunConfig, inputs: &Inputs, doc: &ModelDocument) -> Result<Outputs> {
    let design = design_for_document(inputs, doc)?;
    let model = doc.to_model()?;
    let periods = standard_periods(&design, cfg.lockdown_last_month, cfg.lockdown_uplift);
    let mc = cfg.monte_carlo();
    let sim = monte_carlo_ci(&model, &design, &mc, &periods)?;
    let rows = gdp_impacts(&sim.periods, cfg.residential_share, cfg.lockdown_uplift)?;
    let mut out = Outputs::default();
    out.push("impact_daily.csv", sim.series.to_csv_string());
    out.push("impact_periods.csv", period_report_csv(&rows));
    out.push(
        "impact_periods.json",
        to_json(&PeriodReport {
            model: doc.model,
            draws: mc.draws,
            seed: mc.seed,
            ci_level: mc.level,
            aggregation: mc.aggregation,
            periods: &rows,
        })?,
    );
    Ok(out)
}

pub fn placebo_for(cfg: &RunConfig, doc: &ModelDocument) -> Result<PlaceboReport> {
    let model = doc.to_model()?;
    placebo_test(&model, &doc.spec, cfg.placebo_weeks, cfg.placebo_alpha)
}

/// Placebo report (JSON and text) for a stored model.
pub fn cmd_placebo(cfg: &RunConfig, doc: &ModelDocument) -> Result<Outputs> {
    let report = placebo_for(cfg, doc)?;
    let n = doc.model;
    let mut out = Outputs::default();
    out.push(format!("placebo_model_{n}.json"), report.to_json()?);
    out.push(format!("placebo_model_{n}.txt"), report.to_table());
    Ok(out)
}

/// Fits all three models and writes the coefficient table, the period table
/// of the autocorrelation model, placebo reports and descriptive plot data.
pub fn cmd_report(cfg: &RunConfig) -> Result<Outputs> {
    let inputs = load_inputs(cfg)?;
    let mut out = Outputs::default();
    let mut docs = Vec::new();
    for v in ModelVariant::ALL {
        let (doc, _) = fit_variant(cfg, &inputs, v)?;
        out.push(format!("model_{}.json", v.number()), doc.to_json()?);
        docs.push(doc);
    }
    out.push("coefficients.txt", coefficient_table(&docs));
    for doc in &docs {
        out.extend(cmd_placebo(cfg, doc)?);
    }
    let preferred = &docs[2];
    out.extend(impact_outputs(cfg, &inputs, preferred)?);

    let years: BTreeSet<i32> = inputs.series.iter().map(|o| o.date.year()).collect();
    let overlay: Vec<i32> = [cfg.treatment_year - 1, cfg.treatment_year]
        .into_iter()
        .filter(|y| years.contains(y))
        .collect();
    let exports = descriptive_exports(
        &inputs.series,
        &ExportConfig {
            overlay_years: overlay,
            week_binning: cfg.week_binning,
            ..ExportConfig::default()
        },
    )?;
    out.push("year_overlay.csv", exports.year_overlay_csv);
    out.push("weekday_profile.csv", exports.weekday_profile_csv);
    out.push("temperature_scatter.csv", exports.temperature_scatter_csv);
    Ok(out)
}

/// Simulation settings: a [`SyntheticSpec`] plus study keys.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub spec: SyntheticSpec,
    /// 0 writes the synthetic bundle only.
    pub replications: usize,
    pub draws: usize,
    pub out_dir: PathBuf,
}

const STUDY_KEYS: [&str; 3] = ["replications", "draws", "out_dir"];

impl SimulateConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut take_usize = |key: &str, default: usize| -> Result<usize> {
            match table.remove(key) {
                None => Ok(default),
                Some(toml::Value::Integer(v)) if v >= 0 => Ok(v as usize),
                Some(v) => Err(Error::Config(format!("{key} must be a non-negative integer, got {v}"))),
            }
        };
        let replications = take_usize(STUDY_KEYS[0], 0)?;
        let draws = take_usize(STUDY_KEYS[1], 1000)?;
        if draws == 0 {
            return Err(Error::Config("draws must be at least 1".into()));
        }
        let out_dir = match table.remove(STUDY_KEYS[2]) {
            None => PathBuf::from("out"),
            Some(toml::Value::String(s)) => PathBuf::from(s),
            Some(v) => return Err(Error::Config(format!("out_dir must be a string, got {v}"))),
        };
        let spec: SyntheticSpec = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        spec.validate()?;
        Ok(Self {
            spec,
            replications,
            draws,
            out_dir,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if cfg.out_dir.is_relative() {
            cfg.out_dir = path.parent().unwrap_or(Path::new(".")).join(&cfg.out_dir);
        }
        Ok(cfg)
    }
}

/// Run configuration pointing at the files of a synthetic bundle.
const BUNDLE_CONFIG: &str = "\
load_path = \"load_hourly.csv\"
temp_paths = [\"temp_station_a.csv\", \"temp_station_b.csv\"]
temp_units = [\"F\", \"C\"]
holidays_path = \"holidays.csv\"
";

/// Synthetic input bundle, truth files and, with replications, a recovery
/// study summary.
pub fn cmd_simulate(cfg: &SimulateConfig) -> Result<Outputs> {
    let spec = &cfg.spec;
    let holidays = HolidayCalendar::italian(spec.start.year(), spec.end.year());
    let bundle = fixture_bundle(spec, &holidays)?;
    let (series, _) = generate_series(spec, &holidays)?;
    let mut out = Outputs::default();
    out.push("load_hourly.csv", bundle.hourly_load_csv);
    out.push("temp_station_a.csv", bundle.station_a_csv);
    out.push("temp_station_b.csv", bundle.station_b_csv);
    out.push("holidays.csv", bundle.holidays_csv);
    out.push("synthetic_daily.csv", series.to_csv_string());
    out.push("true_impact.csv", bundle.truth_csv);
    out.push("run.toml", BUNDLE_CONFIG);
    if cfg.replications > 0 {
        let settings = StudySettings {
            replications: cfg.replications,
            monte_carlo: Some(crate::impact::MonteCarloSettings {
                draws: cfg.draws,
                seed: spec.seed,
                ..Default::default()
            }),
            ..StudySettings::default()
        };
        let model = crate::features::ModelSpec {
            kink_f: spec.kink_f,
            treatment_year: spec.treatment_year,
            interaction_weeks: spec.interaction_weeks,
            treatment_weeks: spec.treatment_weeks,
            ..Default::default()
        };
        let study = recovery_study(spec, &holidays, &model, &settings)?;
        let summary = study.summary();
        out.push("recovery_summary.json", summary.to_json()? + "\n");
        out.push("recovery_coefficients.csv", summary.coefficients_csv());
    }
    Ok(out)
}
