//! Placebo checks on pre-treatment interactions, the long-run GDP/electricity
//! correlation check, and plot-ready descriptive tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::{Datelike, Weekday};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::estimator::{two_sided_p, FittedModel};
use crate::features::{week_index_with, Column, ModelSpec, WeekBinning, WeekRange};
use crate::ingest::DailySeries;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaceboWeek {
    pub week: u32,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Joint Wald test that all pre-treatment interactions are zero. This is an
/// addition to the per-week checks, not part of the original criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointWald {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub pass: bool,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaceboReport {
    pub year: i32,
    pub weeks: Vec<PlaceboWeek>,
    pub alpha: f64,
    /// True iff every pre-treatment interaction has p ≥ alpha.
    pub pass: bool,
    pub joint: JointWald,
}

impl PlaceboReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "In-time placebo test, {} interactions (alpha = {})",
            self.year, self.alpha
        )
        .unwrap();
        writeln!(
            out,
            "{:<6} {:>10} {:>10} {:>8} {:>8}",
            "week", "coef x100", "se x100", "z", "p"
        )
        .unwrap();
        for w in &self.weeks {
            writeln!(
                out,
                "{:<6} {:>10.2} {:>10.2} {:>8.2} {:>8.4}{}",
                w.week,
                100.0 * w.coefficient,
                100.0 * w.std_error,
                w.t_stat,
                w.p_value,
                if w.significant { " *" } else { "" }
            )
            .unwrap();
        }
        writeln!(out, "per-week criterion: {}", pass_label(self.pass)).unwrap();
        writeln!(
            out,
            "joint Wald (extension): chi2({}) = {:.3}, p = {:.4}, {}",
            self.joint.df,
            self.joint.statistic,
            self.joint.p_value,
            pass_label(self.joint.pass)
        )
        .unwrap();
        out
    }
}

fn pass_label(b: bool) -> &'static str {
    if b {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Two-sided normal tests on the pre-treatment interaction coefficients.
pub fn placebo_test(
    model: &FittedModel,
    spec: &ModelSpec,
    pre_weeks: WeekRange,
    alpha: f64,
) -> Result<PlaceboReport> {
    if !pre_weeks.is_subset_of(&spec.interaction_weeks) {
        return Err(Error::Spec(format!(
            "placebo weeks {pre_weeks} not inside interaction weeks {}",
            spec.interaction_weeks
        )));
    }
    if pre_weeks.overlaps(&spec.treatment_weeks) {
        return Err(Error::Spec(format!(
            "placebo weeks {pre_weeks} overlap treatment weeks {}",
            spec.treatment_weeks
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("significance level {alpha} not in (0, 1)")));
    }
    let mut idx = Vec::new();
    let mut weeks = Vec::new();
    for week in pre_weeks.weeks() {
        let col = Column::Interaction {
            week,
            year: spec.treatment_year,
        };
        let j = model.column_index(col).ok_or_else(|| {
            Error::Spec(format!("model has no interaction column for week {week}"))
        })?;
        let coefficient = model.beta[j];
        let std_error = model.covariance[(j, j)].max(0.0).sqrt();
        let p_value = two_sided_p(coefficient, std_error);
        idx.push(j);
        weeks.push(PlaceboWeek {
            week,
            coefficient,
            std_error,
            t_stat: if std_error > 0.0 {
                coefficient / std_error
            } else {
                f64::NAN
            },
            p_value,
            significant: p_value < alpha,
        });
    }
    let pass = weeks.iter().all(|w| !w.significant);

    let b = DVector::from_iterator(idx.len(), idx.iter().map(|&j| model.beta[j]));
    let v = DMatrix::from_fn(idx.len(), idx.len(), |r, c| model.covariance[(idx[r], idx[c])]);
    let statistic = match v.cholesky() {
        Some(ch) => b.dot(&ch.solve(&b)),
        None => {
            return Err(Error::Covariance(
                "pre-treatment covariance block is not positive definite".into(),
            ))
        }
    };
    let df = idx.len();
    let chi2 = ChiSquared::new(df as f64).map_err(|e| Error::Covariance(e.to_string()))?;
    let p_value = 1.0 - chi2.cdf(statistic);
    Ok(PlaceboReport {
        year: spec.treatment_year,
        weeks,
        alpha,
        pass,
        joint: JointWald {
            statistic,
            df,
            p_value,
            pass: p_value >= alpha,
            note: "joint test is an extension beyond the per-week criterion",
        },
    })
}

/// Pearson correlation of the first differences of two annual series,
/// aligned on common years. The common years must be consecutive.
pub fn first_diff_correlation(annual_a: &[(i32, f64)], annual_b: &[(i32, f64)]) -> Result<f64> {
    let a: BTreeMap<i32, f64> = annual_a.iter().copied().collect();
    let b: BTreeMap<i32, f64> = annual_b.iter().copied().collect();
    let years: Vec<i32> = a.keys().filter(|y| b.contains_key(y)).copied().collect();
    if years.len() < 3 {
        return Err(Error::Data(format!(
            "need at least 3 overlapping years, found {}",
            years.len()
        )));
    }
    if years.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::Data("overlapping years are not consecutive".into()));
    }
    let da: Vec<f64> = years.windows(2).map(|w| a[&w[1]] - a[&w[0]]).collect();
    let db: Vec<f64> = years.windows(2).map(|w| b[&w[1]] - b[&w[0]]).collect();
    pearson(&da, &db)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Data("a differenced series is constant".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Weekday-profile window, in week-of-year bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileWindow {
    pub label: String,
    pub weeks: WeekRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportConfig {
    /// Years overlaid by day of year.
    pub overlay_years: Vec<i32>,
    pub windows: Vec<ProfileWindow>,
    pub week_binning: WeekBinning,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            overlay_years: vec![2019, 2020],
            windows: vec![
                ProfileWindow {
                    label: "before_lockdown".into(),
                    weeks: WeekRange { first: 5, last: 9 },
                },
                ProfileWindow {
                    label: "during_lockdown".into(),
                    weeks: WeekRange { first: 12, last: 16 },
                },
            ],
            week_binning: WeekBinning::Fold52,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveExports {
    /// `day_of_year,<year>...` daily load by year.
    pub year_overlay_csv: String,
    /// `year,window,weekday,mean_load_mwh,days`.
    pub weekday_profile_csv: String,
    /// `date,temp_f,load_mwh`.
    pub temperature_scatter_csv: String,
}

pub const WEEKDAYS: [Weekday; 7] = [
    Weekday::Mon,
    Weekday::Tue,
    Weekday::Wed,
    Weekday::Thu,
    Weekday::Fri,
    Weekday::Sat,
    Weekday::Sun,
];

/// Mean daily load per weekday over the given week bins of one year.
pub fn weekday_profile(
    series: &DailySeries,
    year: i32,
    weeks: WeekRange,
    binning: WeekBinning,
) -> [Option<f64>; 7] {
    let mut sums = [(0.0, 0usize); 7];
    for o in series.iter() {
        if o.date.year() == year && weeks.contains(week_index_with(o.date, binning)) {
            let k = o.date.weekday().num_days_from_monday() as usize;
            sums[k].0 += o.load_mwh;
            sums[k].1 += 1;
        }
    }
    sums.map(|(s, c)| (c > 0).then(|| s / c as f64))
}

pub fn descriptive_exports(series: &DailySeries, config: &ExportConfig) -> Result<DescriptiveExports> {
    let years: BTreeSet<i32> = series.iter().map(|o| o.date.year()).collect();
    let missing: Vec<String> = config
        .overlay_years
        .iter()
        .filter(|y| !years.contains(y))
        .map(|y| y.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Range(format!(
            "series has no data for year(s) {}",
            missing.join(", ")
        )));
    }

    let mut by_year: BTreeMap<(i32, u32), f64> = BTreeMap::new();
    for o in series.iter() {
        by_year.insert((o.date.year(), o.date.ordinal()), o.load_mwh);
    }
    let mut overlay = String::from("day_of_year");
    for y in &config.overlay_years {
        write!(overlay, ",{y}").unwrap();
    }
    overlay.push('\n');
    for doy in 1..=366u32 {
        if config
            .overlay_years
            .iter()
            .all(|y| !by_year.contains_key(&(*y, doy)))
        {
            continue;
        }
        write!(overlay, "{doy}").unwrap();
        for y in &config.overlay_years {
            match by_year.get(&(*y, doy)) {
                Some(v) => write!(overlay, ",{v}").unwrap(),
                None => overlay.push(','),
            }
        }
        overlay.push('\n');
    }

    let mut profile = String::from("year,window,weekday,mean_load_mwh,days\n");
    for y in &years {
        for w in &config.windows {
            let mut counts = [0usize; 7];
            for o in series.iter() {
                if o.date.year() == *y && w.weeks.contains(week_index_with(o.date, config.week_binning)) {
                    counts[o.date.weekday().num_days_from_monday() as usize] += 1;
                }
            }
            if counts.iter().all(|c| *c == 0) {
                continue;
            }
            let means = weekday_profile(series, *y, w.weeks, config.week_binning);
            for (k, day) in WEEKDAYS.iter().enumerate() {
                let mean = means[k].map(|m| m.to_string()).unwrap_or_default();
                writeln!(profile, "{y},{},{day},{mean},{}", w.label, counts[k]).unwrap();
            }
        }
    }

    let mut scatter = String::from("date,temp_f,load_mwh\n");
    for o in series.iter() {
        writeln!(scatter, "{},{},{}", o.date, o.temp_f, o.load_mwh).unwrap();
    }

    Ok(DescriptiveExports {
        year_overlay_csv: overlay,
        weekday_profile_csv: profile,
        temperature_scatter_csv: scatter,
    })
}
