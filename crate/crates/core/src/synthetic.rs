//! Simulation from the log-load data-generating process with known
//! coefficients, used as a ground-truth oracle for the estimators.
//!
//! `y_t = β₀ + weekday_t + holiday_t + δ₁ T_t + δ₂ max(T_t − k, 0) + γ_w
//!        + γ*_w 1[year = treatment year] + u_t`, with stationary AR(1) `u_t`.
//! Weekday effects are relative to Monday and week effects are indexed by
//! 7-day bins from January 1 with days 365-366 folded into week 52.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::Range;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::DVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::fit;
use crate::features::{
    build_design_matrix, Column, DesignMatrix, ModelSpec, ModelVariant, WeekBinning, WeekRange,
};
use crate::impact::{
    aggregate_impact, monte_carlo_ci, standard_periods, ImpactRow, ImpactSeries,
    Interval, MonteCarloSettings, Period, UPLIFT_LOCKDOWN,
};
use crate::ingest::{
    DailyObservation, DailySeries, HolidayCalendar, HolidayCategory, HourlyLoadRecord,
};

const TEMP_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).expect("valid date")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub seed: u64,
    /// Innovation standard deviation of the AR(1) error.
    pub sigma: f64,
    pub phi: f64,
    pub intercept: f64,
    /// Tuesday through Sunday, relative to Monday.
    pub weekday_effects: Vec<f64>,
    pub holiday_major: f64,
    pub holiday_minor: f64,
    pub temp_linear: f64,
    pub temp_hinge: f64,
    pub kink_f: f64,
    /// Week 1 through 52.
    pub week_effects: Vec<f64>,
    pub treatment_year: i32,
    pub interaction_weeks: WeekRange,
    pub treatment_weeks: WeekRange,
    /// Treatment-year effect of week `i + 1`; weeks past the end are zero.
    pub treatment_effects: Vec<f64>,
    pub temp_mean: f64,
    pub temp_amplitude: f64,
    pub temp_noise: f64,
}

/// Week-of-year profile: smooth annual wave, mid-August shutdown and the
/// Christmas week.
fn default_week_effects() -> Vec<f64> {
    (1..=52u32)
        .map(|w| {
            let wave = 0.03 * (2.0 * PI * (w as f64 - 1.0) / 52.0).sin();
            let special = match w {
                32 | 33 => -0.18,
                34 => -0.06,
                52 => -0.12,
                _ => 0.0,
            };
            if w == 1 {
                0.0
            } else {
                wave + special
            }
        })
        .collect()
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let mut treatment_effects = vec![0.0; 10];
        treatment_effects.extend(
            [
                -8.15, -18.71, -23.84, -22.53, -25.58, -18.30, -10.82, -11.38, -10.85, -9.13,
                -7.30, -5.13,
            ]
            .iter()
            .map(|v| v / 100.0),
        );
        Self {
            start: d(2015, 1, 1),
            end: d(2020, 5, 31),
            seed: 20200310,
            sigma: 0.03,
            phi: 0.6,
            intercept: 10.47,
            weekday_effects: vec![0.04, 0.0474, 0.0459, 0.0371, -0.1191, -0.237],
            holiday_major: -0.2134,
            holiday_minor: -0.0542,
            temp_linear: -0.0021,
            temp_hinge: 0.0083,
            kink_f: 62.0,
            week_effects: default_week_effects(),
            treatment_year: 2020,
            interaction_weeks: WeekRange { first: 1, last: 22 },
            treatment_weeks: WeekRange { first: 11, last: 22 },
            treatment_effects,
            temp_mean: 60.0,
            temp_amplitude: 18.0,
            temp_noise: 4.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.end < self.start {
            return bad(format!("span {}..{} is empty", self.start, self.end));
        }
        if !(self.phi.is_finite() && self.phi.abs() < 1.0) {
            return bad(format!("phi {} must satisfy |phi| < 1", self.phi));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!("sigma {} must be non-negative", self.sigma));
        }
        if !(self.temp_noise.is_finite() && self.temp_noise >= 0.0) {
            return bad(format!("temp_noise {} must be non-negative", self.temp_noise));
        }
        if self.weekday_effects.len() != 6 {
            return bad(format!(
                "weekday_effects needs 6 values (Tue..Sun), got {}",
                self.weekday_effects.len()
            ));
        }
        if self.week_effects.len() != 52 {
            return bad(format!(
                "week_effects needs 52 values, got {}",
                self.week_effects.len()
            ));
        }
        if self.treatment_effects.len() > 53 {
            return bad("treatment_effects has more than 53 weeks".into());
        }
        for (i, e) in self.treatment_effects.iter().enumerate() {
            let week = i as u32 + 1;
            if *e != 0.0 && !self.interaction_weeks.contains(week) {
                return bad(format!(
                    "treatment effect for week {week} lies outside interaction weeks {}",
                    self.interaction_weeks
                ));
            }
        }
        if !self.treatment_weeks.is_subset_of(&self.interaction_weeks) {
            return bad(format!(
                "treatment weeks {} not inside interaction weeks {}",
                self.treatment_weeks, self.interaction_weeks
            ));
        }
        let all = [
            self.intercept,
            self.holiday_major,
            self.holiday_minor,
            self.temp_linear,
            self.temp_hinge,
            self.kink_f,
            self.temp_mean,
            self.temp_amplitude,
        ];
        if all
            .iter()
            .chain(&self.weekday_effects)
            .chain(&self.week_effects)
            .chain(&self.treatment_effects)
            .any(|v| !v.is_finite())
        {
            return bad("non-finite coefficient".into());
        }
        Ok(())
    }

    /// Variance of the stationary error, `σ² / (1 − φ²)`.
    pub fn marginal_variance(&self) -> f64 {
        self.sigma * self.sigma / (1.0 - self.phi * self.phi)
    }

    fn weekday_effect(&self, day: Weekday) -> f64 {
        match day.num_days_from_monday() {
            0 => 0.0,
            i => self.weekday_effects[i as usize - 1],
        }
    }

    fn week_of(date: NaiveDate) -> u32 {
        ((date.ordinal() - 1) / 7 + 1).min(52)
    }

    fn treatment_effect(&self, date: NaiveDate) -> f64 {
        if date.year() != self.treatment_year {
            return 0.0;
        }
        let w = Self::week_of(date) as usize;
        self.treatment_effects.get(w - 1).copied().unwrap_or(0.0)
    }

    fn is_treated(&self, date: NaiveDate) -> bool {
        date.year() == self.treatment_year && self.treatment_weeks.contains(Self::week_of(date))
    }

    /// Noise-free log load on `date` at temperature `temp`, excluding the
    /// treatment effect.
    fn baseline_eta(&self, date: NaiveDate, temp: f64, holidays: &HolidayCalendar) -> f64 {
        let holiday = match holidays.get(date) {
            Some(HolidayCategory::Major) => self.holiday_major,
            Some(HolidayCategory::Minor) => self.holiday_minor,
            None => 0.0,
        };
        self.intercept
            + self.weekday_effect(date.weekday())
            + holiday
            + self.temp_linear * temp
            + self.temp_hinge * (temp - self.kink_f).max(0.0)
            + self.week_effects[Self::week_of(date) as usize - 1]
    }

    fn dates(&self) -> Vec<NaiveDate> {
        self.start.iter_days().take_while(|x| *x <= self.end).collect()
    }

    /// Seasonal temperature path with Gaussian daily noise.
    pub fn temperature_path(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(TEMP_STREAM);
        self.dates()
            .iter()
            .map(|date| {
                let phase = 2.0 * PI * (date.ordinal() as f64 - 15.0) / 365.25;
                let z: f64 = rng.sample(StandardNormal);
                self.temp_mean - self.temp_amplitude * phase.cos() + self.temp_noise * z
            })
            .collect()
    }

    /// Stationary AR(1) error path.
    pub fn error_path(&self) -> Vec<f64> {
        let n = self.dates().len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(NOISE_STREAM);
        let mut out = Vec::with_capacity(n);
        let mut prev = 0.0;
        for t in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let u = if t == 0 {
                self.marginal_variance().sqrt() * z
            } else {
                self.phi * prev + self.sigma * z
            };
            out.push(u);
            prev = u;
        }
        out
    }

    /// Copy with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Simulated daily series and the true impact series. True impacts are
/// `100(exp(γ*_w) − 1)` on treatment-week days and zero elsewhere; the level
/// columns hold expected loads with and without the treatment effect.
pub fn generate_series(
    spec: &SyntheticSpec,
    holidays: &HolidayCalendar,
) -> Result<(DailySeries, ImpactSeries)> {
    spec.validate()?;
    let dates = spec.dates();
    let temps = spec.temperature_path();
    let errors = spec.error_path();
    let half_var = 0.5 * spec.marginal_variance();

    let mut obs = Vec::with_capacity(dates.len());
    let mut rows = Vec::new();
    for ((date, temp), u) in dates.iter().zip(&temps).zip(&errors) {
        let base = spec.baseline_eta(*date, *temp, holidays);
        let effect = spec.treatment_effect(*date);
        obs.push(DailyObservation {
            date: *date,
            load_mwh: (base + effect + u).exp(),
            temp_f: *temp,
        });
        let shift = if spec.is_treated(*date) { effect } else { 0.0 };
        let impact_pct = 100.0 * shift.exp_m1();
        rows.push(ImpactRow {
            date: *date,
            fitted_mwh: (base + effect + half_var).exp(),
            counterfactual_mwh: (base + effect - shift + half_var).exp(),
            impact_pct,
            ci_lo: impact_pct,
            ci_hi: impact_pct,
        });
    }
    Ok((
        DailySeries::new(obs)?,
        ImpactSeries {
            rows,
            ci_level: 0.0,
        },
    ))
}

/// True coefficient for every column of `design`, given that the intercept
/// absorbs the baseline weekday and the first week present in the sample.
pub fn true_coefficients(spec: &SyntheticSpec, design: &DesignMatrix) -> Result<DVector<f64>> {
    let ms = design.spec();
    if ms.week_binning != WeekBinning::Fold52 {
        return Err(Error::Spec("synthetic truth needs 52-week binning".into()));
    }
    if ms.include_temperature && ms.kink_f != spec.kink_f {
        return Err(Error::Spec(format!(
            "model kink {} differs from simulated kink {}",
            ms.kink_f, spec.kink_f
        )));
    }
    let base_week = design
        .dates()
        .iter()
        .map(|x| SyntheticSpec::week_of(*x))
        .min()
        .ok_or_else(|| Error::Data("empty design".into()))?;
    let base_day = spec.weekday_effect(ms.baseline_weekday);
    let base_fe = spec.week_effects[base_week as usize - 1];
    let values = design
        .columns()
        .iter()
        .map(|c| match *c {
            Column::Intercept => Ok(spec.intercept + base_day + base_fe),
            Column::Weekday(day) => Ok(spec.weekday_effect(day) - base_day),
            Column::HolidayMajor => Ok(spec.holiday_major),
            Column::HolidayMinor => Ok(spec.holiday_minor),
            Column::Temperature => Ok(spec.temp_linear),
            Column::TemperatureHinge => Ok(spec.temp_hinge),
            Column::WeekFixedEffect(w) => Ok(spec.week_effects[w as usize - 1] - base_fe),
            Column::Interaction { week, year } if year == spec.treatment_year => Ok(spec
                .treatment_effects
                .get(week as usize - 1)
                .copied()
                .unwrap_or(0.0)),
            Column::Interaction { year, .. } => Err(Error::Spec(format!(
                "interaction year {year} is not the simulated treatment year"
            ))),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DVector::from_vec(values))
}

/// Relative hourly load shape, hours 1-24.
const HOURLY_SHAPE: [f64; 24] = [
    0.80, 0.76, 0.74, 0.73, 0.74, 0.80, 0.92, 1.05, 1.14, 1.18, 1.19, 1.18, 1.12, 1.10, 1.13,
    1.14, 1.14, 1.16, 1.18, 1.15, 1.07, 0.99, 0.91, 0.84,
];

fn last_sunday(year: i32, month: u32) -> NaiveDate {
    let mut x = if month == 12 {
        d(year + 1, 1, 1)
    } else {
        d(year, month + 1, 1)
    };
    loop {
        x = x - Days::new(1);
        if x.weekday() == Weekday::Sun {
            return x;
        }
    }
}

/// Splits daily loads into hourly records with a fixed intraday shape.
/// The last Sunday of March has 23 hours and the last Sunday of October 25,
/// as on a daylight-saving calendar. Quantities are rounded to 1 kWh.
pub fn split_hourly(series: &DailySeries) -> Vec<HourlyLoadRecord> {
    let mut out = Vec::with_capacity(series.len() * 24);
    for o in series.iter() {
        let mut shape: Vec<f64> = HOURLY_SHAPE.to_vec();
        if o.date == last_sunday(o.date.year(), 3) {
            shape.remove(2);
        } else if o.date == last_sunday(o.date.year(), 10) {
            shape.insert(2, HOURLY_SHAPE[2]);
        }
        let total: f64 = shape.iter().sum();
        for (h, w) in shape.iter().enumerate() {
            out.push(HourlyLoadRecord {
                date: o.date,
                hour: h as u8,
                quantity_mwh: (o.load_mwh * w / total * 1000.0).round() / 1000.0,
            });
        }
    }
    out
}

/// Input files a real run would consume, derived from a synthetic series.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureBundle {
    /// `date,hour,quantity_mwh` with hours labelled 1-24 (1-25 on the
    /// long autumn day).
    pub hourly_load_csv: String,
    /// `date,temp` in °F, true temperature + 3.
    pub station_a_csv: String,
    /// `date,temp` in °C, true temperature − 3 converted.
    pub station_b_csv: String,
    pub holidays_csv: String,
    pub truth_csv: String,
}

pub fn fixture_bundle(spec: &SyntheticSpec, holidays: &HolidayCalendar) -> Result<FixtureBundle> {
    let (series, truth) = generate_series(spec, holidays)?;
    let mut hourly = String::from("date,hour,quantity_mwh\n");
    for r in split_hourly(&series) {
        let _ = writeln!(hourly, "{},{},{:.3}", r.date, r.hour + 1, r.quantity_mwh);
    }
    let mut in_span = HolidayCalendar::new();
    for (day, c) in holidays.iter().filter(|(x, _)| *x >= spec.start && *x <= spec.end) {
        in_span.insert(day, c)?;
    }
    let mut a = String::from("date,temp\n");
    let mut b = String::from("date,temp\n");
    for o in series.iter() {
        let _ = writeln!(a, "{},{:.2}", o.date, o.temp_f + 3.0);
        let _ = writeln!(b, "{},{:.2}", o.date, (o.temp_f - 3.0 - 32.0) * 5.0 / 9.0);
    }
    Ok(FixtureBundle {
        hourly_load_csv: hourly,
        station_a_csv: a,
        station_b_csv: b,
        holidays_csv: in_span.to_csv_string(),
        truth_csv: truth.to_csv_string(),
    })
}

/// Settings of a recovery study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub replications: usize,
    pub variants: Vec<ModelVariant>,
    /// Interval settings for period aggregates; `None` skips them.
    pub monte_carlo: Option<MonteCarloSettings>,
    pub lockdown_last_month: u32,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            replications: 100,
            variants: ModelVariant::ALL.to_vec(),
            monte_carlo: Some(MonteCarloSettings {
                draws: 1000,
                ..MonteCarloSettings::default()
            }),
            lockdown_last_month: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRecord {
    pub label: String,
    pub truth: f64,
    pub interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantFit {
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub truth: Vec<f64>,
    pub phi: Option<f64>,
    pub aggregates: Vec<AggregateRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    /// One entry per studied variant; failures keep the error message.
    pub fits: Vec<std::result::Result<VariantFit, String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryStudy {
    pub spec: SyntheticSpec,
    pub variants: Vec<ModelVariant>,
    /// Column names per variant, from the first replication.
    pub columns: Vec<Vec<Column>>,
    pub records: Vec<ReplicationRecord>,
}

/// Seed of replication `r`, derived from the master seed.
pub fn replication_seed(master: u64, r: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(r as u64 + 2);
    rng.next_u64()
}

fn run_variant(
    spec: &SyntheticSpec,
    full: &DesignMatrix,
    variant: ModelVariant,
    truth_series: &ImpactSeries,
    periods: &[Period],
    mc: Option<&MonteCarloSettings>,
) -> Result<VariantFit> {
    let design = full.for_variant(variant);
    let model = fit(&design)?;
    let truth = true_coefficients(spec, &design)?;
    let mut aggregates = Vec::new();
    if let Some(mc) = mc {
        let sim = monte_carlo_ci(&model, &design, mc, periods)?;
        for pi in sim.periods {
            let t = aggregate_impact(truth_series, pi.period.start, pi.period.end, mc.aggregation)?;
            aggregates.push(AggregateRecord {
                label: pi.period.label,
                truth: t,
                interval: pi.electricity,
            });
        }
    }
    Ok(VariantFit {
        std_errors: model.std_errors().iter().copied().collect(),
        estimates: model.beta.iter().copied().collect(),
        truth: truth.iter().copied().collect(),
        phi: model.scale.phi(),
        aggregates,
    })
}

/// Simulates `replications` series from `spec` and fits every requested
/// variant. Fit errors are recorded per replication and do not stop the study.
pub fn recovery_study(
    spec: &SyntheticSpec,
    holidays: &HolidayCalendar,
    model: &ModelSpec,
    settings: &StudySettings,
) -> Result<RecoveryStudy> {
    spec.validate()?;
    if settings.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let base = ModelVariant::Base.apply(model);
    let run = |r: usize| -> Result<(ReplicationRecord, Vec<Vec<Column>>)> {
        let seed = replication_seed(spec.seed, r);
        let rspec = spec.with_seed(seed);
        let (series, truth) = generate_series(&rspec, holidays)?;
        let full = build_design_matrix(&series, holidays, &base)?;
        let periods = standard_periods(&full, settings.lockdown_last_month, UPLIFT_LOCKDOWN);
        let mut fits = Vec::new();
        let mut columns = Vec::new();
        for v in &settings.variants {
            columns.push(full.for_variant(*v).columns().to_vec());
            fits.push(
                run_variant(&rspec, &full, *v, &truth, &periods, settings.monte_carlo.as_ref())
                    .map_err(|e| e.to_string()),
            );
        }
        Ok((
            ReplicationRecord {
                replication: r,
                seed,
                fits,
            },
            columns,
        ))
    };
    let results: Vec<_> = (0..settings.replications)
        .into_par_iter()
        .map(run)
        .collect::<Result<Vec<_>>>()?;
    let columns = results[0].1.clone();
    Ok(RecoveryStudy {
        spec: spec.clone(),
        variants: settings.variants.clone(),
        columns,
        records: results.into_iter().map(|(rec, _)| rec).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSummary {
    pub column: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub rmse: f64,
    /// Mean reported standard error.
    pub mean_se: f64,
    /// Sampling standard deviation of the estimates.
    pub sd: f64,
    /// Share of replications whose nominal 95% normal interval covers truth.
    pub coverage_95: f64,
    /// Share of replications with `|estimate − truth| ≤ 3 SE`.
    pub within_3se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateSummary {
    pub label: String,
    pub mean_truth: f64,
    pub mean_estimate: f64,
    pub coverage: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantSummary {
    pub variant: u8,
    pub label: String,
    pub successful: usize,
    pub failed: usize,
    pub phi_mean: Option<f64>,
    pub coefficients: Vec<CoefficientSummary>,
    pub aggregates: Vec<AggregateSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverySummary {
    pub replications: usize,
    pub variants: Vec<VariantSummary>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

impl RecoveryStudy {
    /// Summary over all replications.
    pub fn summary(&self) -> RecoverySummary {
        self.summarize(0..self.records.len())
    }

    /// Summary over the replications with index in `range`.
    pub fn summarize(&self, range: Range<usize>) -> RecoverySummary {
        let records = &self.records[range.start.min(self.records.len())..range.end.min(self.records.len())];
        let variants = self
            .variants
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let fits: Vec<&VariantFit> =
                    records.iter().filter_map(|r| r.fits[k].as_ref().ok()).collect();
                let failed = records.len() - fits.len();
                let phis: Vec<f64> = fits.iter().filter_map(|f| f.phi).collect();
                let coefficients = if fits.is_empty() {
                    Vec::new()
                } else {
                    self.columns[k]
                        .iter()
                        .enumerate()
                        .map(|(j, c)| coefficient_summary(c, j, &fits))
                        .collect()
                };
                let labels: Vec<String> = fits
                    .first()
                    .map(|f| f.aggregates.iter().map(|a| a.label.clone()).collect())
                    .unwrap_or_default();
                let aggregates = labels
                    .iter()
                    .enumerate()
                    .map(|(a, label)| {
                        let recs: Vec<&AggregateRecord> =
                            fits.iter().filter_map(|f| f.aggregates.get(a)).collect();
                        AggregateSummary {
                            label: label.clone(),
                            mean_truth: mean(recs.iter().map(|r| r.truth)),
                            mean_estimate: mean(recs.iter().map(|r| r.interval.point)),
                            coverage: mean(
                                recs.iter()
                                    .map(|r| if r.interval.contains(r.truth) { 1.0 } else { 0.0 }),
                            ),
                            replications: recs.len(),
                        }
                    })
                    .collect();
                VariantSummary {
                    variant: v.number(),
                    label: v.label().to_string(),
                    successful: fits.len(),
                    failed,
                    phi_mean: (!phis.is_empty()).then(|| mean(phis.iter().copied())),
                    coefficients,
                    aggregates,
                }
            })
            .collect();
        RecoverySummary {
            replications: records.len(),
            variants,
        }
    }
}

fn coefficient_summary(column: &Column, j: usize, fits: &[&VariantFit]) -> CoefficientSummary {
    let truth = fits[0].truth[j];
    let est: Vec<f64> = fits.iter().map(|f| f.estimates[j]).collect();
    let se: Vec<f64> = fits.iter().map(|f| f.std_errors[j]).collect();
    let m = mean(est.iter().copied());
    let n = est.len() as f64;
    let sd = if est.len() > 1 {
        (est.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let share = |k: f64| {
        mean(
            est.iter()
                .zip(&se)
                .map(|(e, s)| if (e - truth).abs() <= k * s { 1.0 } else { 0.0 }),
        )
    };
    CoefficientSummary {
        column: column.name(),
        truth,
        mean_estimate: m,
        bias: m - truth,
        rmse: mean(est.iter().map(|e| (e - truth).powi(2))).sqrt(),
        mean_se: mean(se.iter().copied()),
        sd,
        coverage_95: share(1.959_963_984_540_054),
        within_3se: share(3.0),
    }
}

impl RecoverySummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per (variant, coefficient).
    pub fn coefficients_csv(&self) -> String {
        let mut out = String::from(
            "model,column,truth,mean_estimate,bias,rmse,mean_se,sd,coverage_95,within_3se\n",
        );
        for v in &self.variants {
            for c in &v.coefficients {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    v.variant,
                    c.column,
                    c.truth,
                    c.mean_estimate,
                    c.bias,
                    c.rmse,
                    c.mean_se,
                    c.sd,
                    c.coverage_95,
                    c.within_3se
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        let s = SyntheticSpec::default();
        s.validate().unwrap();
        assert_eq!(s.dates().len(), 1978);
        assert_eq!(s.treatment_effects.len(), 22);
    }

    #[test]
    fn effect_outside_interaction_weeks_rejected() {
        let mut s = SyntheticSpec::default();
        s.treatment_effects.push(-0.1);
        assert!(matches!(s.validate(), Err(Error::Spec(_))));
        let mut s = SyntheticSpec::default();
        s.phi = 1.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn dst_days_have_23_and_25_hours() {
        assert_eq!(last_sunday(2019, 3), d(2019, 3, 31));
        assert_eq!(last_sunday(2019, 10), d(2019, 10, 27));
        assert_eq!(last_sunday(2020, 12), d(2020, 12, 27));
        let spec = SyntheticSpec {
            start: d(2019, 3, 30),
            end: d(2019, 4, 1),
            ..SyntheticSpec::default()
        };
        let (series, _) = generate_series(&spec, &HolidayCalendar::new()).unwrap();
        let hourly = split_hourly(&series);
        let on = |day| hourly.iter().filter(|r| r.date == day).count();
        assert_eq!(on(d(2019, 3, 30)), 24);
        assert_eq!(on(d(2019, 3, 31)), 23);
    }

    #[test]
    fn replication_seeds_differ() {
        let a = replication_seed(1, 0);
        let b = replication_seed(1, 1);
        assert_ne!(a, b);
        assert_eq!(a, replication_seed(1, 0));
    }
}
