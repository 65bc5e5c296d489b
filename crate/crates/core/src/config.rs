//! Run configuration: a flat TOML file with one key per setting.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Every key has a default, so an empty file is a valid config as long
//! as the command at hand does not need input paths.

use std::path::{Path, PathBuf};

use chrono::{NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ErrorModel, ModelSpec, WeekBinning, WeekRange};
use crate::impact::{Aggregation, MonteCarloSettings, UPLIFT_LOCKDOWN};
use crate::ingest::{FillPolicy, HourConvention, TempUnit};

/// Residential share of national consumption, percent.
pub const DEFAULT_RESIDENTIAL_SHARE: f64 = 22.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Hourly load CSV (`date,hour,quantity_mwh`).
    pub load_path: Option<PathBuf>,
    /// One or two daily temperature CSVs (`date,temp`); two are averaged.
    pub temp_paths: Vec<PathBuf>,
    /// Unit of each temperature file; missing entries default to °F.
    pub temp_units: Vec<TempUnit>,
    pub holidays_path: Option<PathBuf>,
    /// Canonical daily CSV; when set it replaces load and temperature inputs.
    pub daily_path: Option<PathBuf>,
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
    pub hour_convention: HourConvention,
    pub fill_policy: FillPolicy,

    pub include_temperature: bool,
    pub kink_f: f64,
    pub error_model: ErrorModel,
    pub hac_max_lag: usize,
    pub treatment_year: i32,
    pub interaction_weeks: WeekRange,
    pub treatment_weeks: WeekRange,
    pub baseline_weekday: Weekday,
    pub week_binning: WeekBinning,

    /// Percent, in (0, 100).
    pub residential_share: f64,
    pub lockdown_uplift: f64,
    /// Months of the treatment year up to this one prefer the lockdown uplift.
    pub lockdown_last_month: u32,
    pub draws: usize,
    pub seed: u64,
    pub ci_level: f64,
    pub aggregation: Aggregation,

    pub placebo_weeks: WeekRange,
    pub placebo_alpha: f64,

    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelSpec::default();
        let mc = MonteCarloSettings::default();
        Self {
            load_path: None,
            temp_paths: Vec::new(),
            temp_units: Vec::new(),
            holidays_path: None,
            daily_path: None,
            start: None,
            end: None,
            hour_convention: HourConvention::default(),
            fill_policy: FillPolicy::default(),
            include_temperature: m.include_temperature,
            kink_f: m.kink_f,
            error_model: m.error_model,
            hac_max_lag: m.hac_max_lag,
            treatment_year: m.treatment_year,
            interaction_weeks: m.interaction_weeks,
            treatment_weeks: m.treatment_weeks,
            baseline_weekday: m.baseline_weekday,
            week_binning: m.week_binning,
            residential_share: DEFAULT_RESIDENTIAL_SHARE,
            lockdown_uplift: UPLIFT_LOCKDOWN,
            lockdown_last_month: 4,
            draws: mc.draws,
            seed: mc.seed,
            ci_level: mc.level,
            aggregation: mc.aggregation,
            placebo_weeks: WeekRange { first: 1, last: 10 },
            placebo_alpha: 0.05,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in self
            .load_path
            .iter_mut()
            .chain(self.holidays_path.iter_mut())
            .chain(self.daily_path.iter_mut())
            .chain(self.temp_paths.iter_mut())
        {
            fix(p);
        }
        fix(&mut self.out_dir);
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.residential_share > 0.0 && self.residential_share < 100.0) {
            return Err(Error::Config(format!(
                "residential_share {} must lie in (0, 100)",
                self.residential_share
            )));
        }
        if self.draws < 1 {
            return Err(Error::Config("draws must be at least 1".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!("ci_level {} must lie in (0, 1)", self.ci_level)));
        }
        if !(self.placebo_alpha > 0.0 && self.placebo_alpha < 1.0) {
            return Err(Error::Config(format!(
                "placebo_alpha {} must lie in (0, 1)",
                self.placebo_alpha
            )));
        }
        if !(self.lockdown_uplift.is_finite() && self.lockdown_uplift > 0.0) {
            return Err(Error::Config("lockdown_uplift must be positive".into()));
        }
        if !(1..=12).contains(&self.lockdown_last_month) {
            return Err(Error::Config("lockdown_last_month must be 1-12".into()));
        }
        if self.temp_paths.len() > 2 {
            return Err(Error::Config("at most two temperature files".into()));
        }
        if self.temp_units.len() > self.temp_paths.len() {
            return Err(Error::Config("more temp_units than temp_paths".into()));
        }
        if let (Some(s), Some(e)) = (self.start, self.end) {
            if e < s {
                return Err(Error::Config(format!("end {e} precedes start {s}")));
            }
        }
        self.model_spec().validate()
    }

    pub fn temp_unit(&self, i: usize) -> TempUnit {
        self.temp_units.get(i).copied().unwrap_or_default()
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            include_temperature: self.include_temperature,
            kink_f: self.kink_f,
            error_model: self.error_model,
            hac_max_lag: self.hac_max_lag,
            treatment_year: self.treatment_year,
            interaction_weeks: self.interaction_weeks,
            treatment_weeks: self.treatment_weeks,
            baseline_weekday: self.baseline_weekday,
            week_binning: self.week_binning,
        }
    }

    pub fn monte_carlo(&self) -> MonteCarloSettings {
        MonteCarloSettings {
            draws: self.draws,
            seed: self.seed,
            level: self.ci_level,
            aggregation: self.aggregation,
        }
    }

    /// Fails unless every configured input file exists.
    pub fn check_inputs_exist(&self) -> Result<()> {
        let paths = self
            .load_path
            .iter()
            .chain(&self.holidays_path)
            .chain(&self.daily_path)
            .chain(&self.temp_paths);
        for p in paths {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} not found", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.model_spec(), ModelSpec::default());
        assert_eq!(cfg.draws, 5000);
        assert_eq!(cfg.residential_share, 22.4);
    }

    #[test]
    fn keys_parse() {
        let cfg = RunConfig::from_toml_str(
            r#"
            load_path = "load.csv"
            temp_paths = ["a.csv", "b.csv"]
            temp_units = ["F", "C"]
            start = "2019-01-01"
            hour_convention = "0-23"
            fill_policy = "interpolate-linear"
            error_model = "hac"
            interaction_weeks = "1-22"
            baseline_weekday = "Sun"
            week_binning = "split53"
            aggregation = "mean-of-daily"
            draws = 100
            "#,
        )
        .unwrap();
        assert_eq!(cfg.temp_unit(1), TempUnit::C);
        assert_eq!(cfg.hour_convention, HourConvention::ZeroBased);
        assert_eq!(cfg.error_model, ErrorModel::Hac);
        assert_eq!(cfg.baseline_weekday, Weekday::Sun);
        assert_eq!(cfg.week_binning, WeekBinning::Split53);
        assert_eq!(cfg.aggregation, Aggregation::MeanOfDaily);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for text in [
            "residential_share = 100.0",
            "residential_share = 0.0",
            "draws = 0",
            "unknown_key = 1",
            "treatment_weeks = \"20-30\"",
        ] {
            let err = RunConfig::from_toml_str(text).unwrap_err();
            assert_eq!(err.class(), crate::ErrorClass::Config, "{text}");
        }
    }

    #[test]
    fn relative_paths_resolve_against_config_dir() {
        let mut cfg = RunConfig::from_toml_str("load_path = \"x/load.csv\"").unwrap();
        cfg.resolve_paths(Path::new("/data"));
        assert_eq!(cfg.load_path.unwrap(), PathBuf::from("/data/x/load.csv"));
        assert_eq!(cfg.out_dir, PathBuf::from("/data/out"));
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
