//! Counterfactual predictions and load/GDP impacts.
//!
//! The counterfactual zeroes the treatment-week interaction coefficients.
//! Levels are retransformed from logs under normal errors,
//! `Ŷ = exp(ŷ + s²/2)` with `s²` the marginal error variance, and the daily
//! impact is `l_t = 100 (Ŷ_t - Ŷ*_t) / Ŷ*_t`.

use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::FittedModel;
use crate::features::DesignMatrix;
use crate::linalg::psd_factor;

/// Residential uplift under which residential use is assumed unchanged.
pub const UPLIFT_UNCHANGED: f64 = 1.0;
/// Residential uplift during lockdown (+40%).
pub const UPLIFT_LOCKDOWN: f64 = 1.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImpactRow {
    pub date: NaiveDate,
    pub fitted_mwh: f64,
    pub counterfactual_mwh: f64,
    pub impact_pct: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactSeries {
    pub rows: Vec<ImpactRow>,
    /// Nominal coverage of the interval columns.
    pub ci_level: f64,
}

impl ImpactSeries {
    /// `date,fitted_mwh,counterfactual_mwh,impact_pct,ci_lo,ci_hi`
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,fitted_mwh,counterfactual_mwh,impact_pct,ci_lo,ci_hi\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.date, r.fitted_mwh, r.counterfactual_mwh, r.impact_pct, r.ci_lo, r.ci_hi
            )
            .unwrap();
        }
        out
    }

    fn rows_between(&self, start: NaiveDate, end: NaiveDate) -> impl Iterator<Item = &ImpactRow> {
        self.rows
            .iter()
            .filter(move |r| r.date >= start && r.date <= end)
    }
}

/// How daily impacts are combined over a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// `100 (ΣŶ - ΣŶ*) / ΣŶ*`.
    #[default]
    EnergyWeighted,
    /// Arithmetic mean of daily percentages.
    MeanOfDaily,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "energy-weighted" => Ok(Aggregation::EnergyWeighted),
            "mean-of-daily" => Ok(Aggregation::MeanOfDaily),
            other => Err(Error::Config(format!("unknown aggregation {other:?}"))),
        }
    }
}

fn check_aligned(model: &FittedModel, design: &DesignMatrix) -> Result<()> {
    if model.beta.len() != design.ncols() {
        return Err(Error::Alignment(format!(
            "model has {} coefficients, design {} columns",
            model.beta.len(),
            design.ncols()
        )));
    }
    if !model.columns.is_empty() && model.columns != design.columns() {
        return Err(Error::Alignment(
            "model column names differ from the design".into(),
        ));
    }
    Ok(())
}

/// Retransformed level predictions; with `zero_treatment` the treatment-week
/// interaction coefficients are replaced by zero.
pub fn predict_level(
    model: &FittedModel,
    design: &DesignMatrix,
    zero_treatment: bool,
) -> Result<DVector<f64>> {
    check_aligned(model, design)?;
    let mut beta = model.beta.clone();
    if zero_treatment {
        for j in design.treatment_columns() {
            beta[j] = 0.0;
        }
    }
    let half_var = 0.5 * model.scale.marginal_variance();
    Ok((design.x() * beta).map(|eta| (eta + half_var).exp()))
}

/// Log-scale shift `Δŷ_t` contributed by the active treatment interactions.
pub fn treatment_shift(model: &FittedModel, design: &DesignMatrix) -> Result<DVector<f64>> {
    check_aligned(model, design)?;
    let cols = design.treatment_columns();
    let mut shift = DVector::zeros(design.nrows());
    for j in cols {
        shift.axpy(model.beta[j], &design.x().column(j), 1.0);
    }
    Ok(shift)
}

/// Point estimates of the daily impact; intervals are degenerate.
pub fn daily_impact(model: &FittedModel, design: &DesignMatrix) -> Result<ImpactSeries> {
    let fitted = predict_level(model, design, false)?;
    let cf = predict_level(model, design, true)?;
    let rows = design
        .dates()
        .iter()
        .enumerate()
        .map(|(i, date)| {
            let impact_pct = 100.0 * (fitted[i] - cf[i]) / cf[i];
            ImpactRow {
                date: *date,
                fitted_mwh: fitted[i],
                counterfactual_mwh: cf[i],
                impact_pct,
                ci_lo: impact_pct,
                ci_hi: impact_pct,
            }
        })
        .collect();
    Ok(ImpactSeries {
        rows,
        ci_level: 0.0,
    })
}

/// Aggregate impact over `[start, end]`.
pub fn aggregate_impact(
    series: &ImpactSeries,
    start: NaiveDate,
    end: NaiveDate,
    aggregation: Aggregation,
) -> Result<f64> {
    let rows: Vec<&ImpactRow> = series.rows_between(start, end).collect();
    if rows.is_empty() {
        return Err(Error::Range(format!("no impact rows between {start} and {end}")));
    }
    Ok(match aggregation {
        Aggregation::EnergyWeighted => {
            let fitted: f64 = rows.iter().map(|r| r.fitted_mwh).sum();
            let cf: f64 = rows.iter().map(|r| r.counterfactual_mwh).sum();
            100.0 * (fitted - cf) / cf
        }
        Aggregation::MeanOfDaily => {
            rows.iter().map(|r| r.impact_pct).sum::<f64>() / rows.len() as f64
        }
    })
}

/// A reporting period with the residential uplift judged most plausible for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub preferred_uplift: f64,
}

/// Calendar months of the treatment year touched by the treatment weeks and
/// inside the sample, plus the first quarter when fully covered. Months up to
/// `lockdown_last_month` prefer `lockdown_uplift`, later months 1.0.
pub fn standard_periods(
    design: &DesignMatrix,
    lockdown_last_month: u32,
    lockdown_uplift: f64,
) -> Vec<Period> {
    let spec = design.spec();
    let year = spec.treatment_year;
    let dates = design.dates();
    let (Some(&first), Some(&last)) = (dates.first(), dates.last()) else {
        return Vec::new();
    };
    let mut months: Vec<u32> = dates
        .iter()
        .filter(|d| d.year() == year && spec.treatment_weeks.contains(spec.week_of(**d)))
        .map(|d| d.month())
        .collect();
    months.dedup();
    let uplift_for = |month: u32| {
        if month <= lockdown_last_month {
            lockdown_uplift
        } else {
            UPLIFT_UNCHANGED
        }
    };
    let mut periods = Vec::new();
    let q1_start = NaiveDate::from_ymd_opt(year, 1, 1).unwrap();
    let q1_end = NaiveDate::from_ymd_opt(year, 3, 31).unwrap();
    for m in months {
        let start = NaiveDate::from_ymd_opt(year, m, 1).unwrap();
        let end = month_end(year, m);
        periods.push(Period {
            label: month_name(m).to_string(),
            start: start.max(first),
            end: end.min(last),
            preferred_uplift: uplift_for(m),
        });
    }
    if first <= q1_start && last >= q1_end {
        periods.push(Period {
            label: "Q1".into(),
            start: q1_start,
            end: q1_end,
            preferred_uplift: uplift_for(3),
        });
    }
    periods
}

fn month_end(year: i32, month: u32) -> NaiveDate {
    let (y, m) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    NaiveDate::from_ymd_opt(y, m, 1).unwrap().pred_opt().unwrap()
}

fn month_name(m: u32) -> &'static str {
    [
        "January", "February", "March", "April", "May", "June", "July", "August", "September",
        "October", "November", "December",
    ][(m - 1) as usize]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn degenerate(point: f64) -> Self {
        Self {
            point,
            lo: point,
            hi: point,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            point: f(self.point),
            lo: f(self.lo),
            hi: f(self.hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodImpact {
    pub period: Period,
    pub electricity: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSettings {
    pub draws: usize,
    pub seed: u64,
    /// Nominal interval coverage, e.g. 0.95.
    pub level: f64,
    pub aggregation: Aggregation,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        Self {
            draws: 5000,
            seed: 20200310,
            level: 0.95,
            aggregation: Aggregation::EnergyWeighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub series: ImpactSeries,
    pub periods: Vec<PeriodImpact>,
}

/// Simulation intervals for daily and period impacts.
///
/// Coefficient vectors are drawn from `N(β̂, V̂)` through a symmetric square
/// root of `V̂`; scale parameters stay at their point estimates. Draw `d` uses
/// its own ChaCha stream, so results do not depend on thread count.
/// Percentiles interpolate linearly between order statistics, and each
/// interval is widened if needed to contain its point estimate.
pub fn monte_carlo_ci(
    model: &FittedModel,
    design: &DesignMatrix,
    settings: &MonteCarloSettings,
    periods: &[Period],
) -> Result<MonteCarloResult> {
    if settings.draws == 0 {
        return Err(Error::Config("Monte Carlo draws must be at least 1".into()));
    }
    if !(settings.level > 0.0 && settings.level < 1.0) {
        return Err(Error::Config(format!(
            "interval level {} must lie in (0, 1)",
            settings.level
        )));
    }
    let point = daily_impact(model, design)?;
    let mut period_points = Vec::with_capacity(periods.len());
    for p in periods {
        period_points.push(aggregate_impact(&point, p.start, p.end, settings.aggregation)?);
    }

    let factor = psd_factor(&model.covariance)?;
    let year = design.spec().treatment_year;
    let mut rows: Vec<usize> = (0..design.nrows())
        .filter(|&i| {
            let d = design.dates()[i];
            d.year() == year || periods.iter().any(|p| d >= p.start && d <= p.end)
        })
        .collect();
    rows.sort_unstable();
    let x_sub: DMatrix<f64> = design.x().select_rows(&rows);
    let treat_cols = design.treatment_columns();
    let t_sub: DMatrix<f64> = x_sub.select_columns(&treat_cols);
    let period_rows: Vec<Vec<usize>> = periods
        .iter()
        .map(|p| {
            rows.iter()
                .enumerate()
                .filter(|(_, &i)| {
                    let d = design.dates()[i];
                    d >= p.start && d <= p.end
                })
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    let half_var = 0.5 * model.scale.marginal_variance();
    let p = model.beta.len();

    let draw = |d: usize| -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(d as u64);
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let beta = &model.beta + &factor * z;
        let eta = &x_sub * &beta;
        let beta_t = DVector::from_fn(treat_cols.len(), |k, _| beta[treat_cols[k]]);
        let shift = &t_sub * beta_t;
        let mut out = Vec::with_capacity(rows.len() + periods.len());
        out.extend(shift.iter().map(|s| 100.0 * s.exp_m1()));
        for pr in &period_rows {
            let v = match settings.aggregation {
                Aggregation::EnergyWeighted => {
                    let (mut fit, mut cf) = (0.0, 0.0);
                    for &k in pr {
                        fit += (eta[k] + half_var).exp();
                        cf += (eta[k] - shift[k] + half_var).exp();
                    }
                    100.0 * (fit - cf) / cf
                }
                Aggregation::MeanOfDaily => {
                    pr.iter().map(|&k| 100.0 * shift[k].exp_m1()).sum::<f64>() / pr.len() as f64
                }
            };
            out.push(v);
        }
        out
    };
    let samples: Vec<Vec<f64>> = (0..settings.draws).into_par_iter().map(draw).collect();

    let lo_q = (1.0 - settings.level) / 2.0;
    let hi_q = 1.0 - lo_q;
    let mut column = vec![0.0; settings.draws];
    let mut bounds = |k: usize, point: f64| -> Interval {
        for (slot, s) in column.iter_mut().zip(&samples) {
            *slot = s[k];
        }
        column.sort_by(f64::total_cmp);
        Interval {
            point,
            lo: percentile_sorted(&column, lo_q).min(point),
            hi: percentile_sorted(&column, hi_q).max(point),
        }
    };

    let mut series = point;
    series.ci_level = settings.level;
    for (k, &i) in rows.iter().enumerate() {
        let r = &mut series.rows[i];
        let iv = bounds(k, r.impact_pct);
        r.ci_lo = iv.lo;
        r.ci_hi = iv.hi;
    }
    let periods = periods
        .iter()
        .zip(&period_points)
        .enumerate()
        .map(|(k, (p, &pt))| PeriodImpact {
            period: p.clone(),
            electricity: bounds(rows.len() + k, pt),
        })
        .collect();
    Ok(MonteCarloResult { series, periods })
}

/// Linear-interpolation percentile of sorted data (`q` in [0, 1]).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Rescales a load impact to productive-sector activity:
/// `load_impact · 100 / (100 - uplift · r)`.
pub fn gdp_impact(load_impact: f64, residential_share: f64, uplift: f64) -> Result<f64> {
    let denom = 100.0 - uplift * residential_share;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "100 - {uplift}·{residential_share} = {denom} must be positive"
        )));
    }
    Ok(load_impact * 100.0 / denom)
}

/// Percentage effect of a dummy in a log-linear model, `100 (e^c - 1)`.
pub fn semi_elasticity(coefficient: f64) -> f64 {
    100.0 * coefficient.exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GdpVariant {
    /// Residential consumption unchanged.
    #[serde(rename = "gdp1")]
    Unchanged,
    /// Residential consumption elevated during lockdown.
    #[serde(rename = "gdp2")]
    Elevated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdpImpact {
    pub period: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub electricity: Interval,
    pub gdp1: Interval,
    pub gdp2: Interval,
    pub residential_share: f64,
    pub elevated_uplift: f64,
    pub preferred: GdpVariant,
}

/// Applies both GDP rescalings to each period's electricity interval.
pub fn gdp_impacts(
    periods: &[PeriodImpact],
    residential_share: f64,
    elevated_uplift: f64,
) -> Result<Vec<GdpImpact>> {
    gdp_impact(0.0, residential_share, elevated_uplift.max(UPLIFT_UNCHANGED))?;
    Ok(periods
        .iter()
        .map(|p| {
            let scale = |uplift: f64| {
                p.electricity
                    .map(|v| gdp_impact(v, residential_share, uplift).expect("checked above"))
            };
            GdpImpact {
                period: p.period.label.clone(),
                start: p.period.start,
                end: p.period.end,
                electricity: p.electricity,
                gdp1: scale(UPLIFT_UNCHANGED),
                gdp2: scale(elevated_uplift),
                residential_share,
                elevated_uplift,
                preferred: if p.period.preferred_uplift > UPLIFT_UNCHANGED {
                    GdpVariant::Elevated
                } else {
                    GdpVariant::Unchanged
                },
            }
        })
        .collect())
}

/// `period,electricity_pct,ci,gdp1_pct,ci,gdp2_pct,ci,preferred`, one decimal.
pub fn period_report_csv(rows: &[GdpImpact]) -> String {
    let mut out = String::from("period,electricity_pct,ci,gdp1_pct,ci,gdp2_pct,ci,preferred\n");
    let ci = |iv: &Interval| format!("[{:.1}; {:.1}]", iv.lo, iv.hi);
    for r in rows {
        writeln!(
            out,
            "{},{:.1},{},{:.1},{},{:.1},{},{}",
            r.period,
            r.electricity.point,
            ci(&r.electricity),
            r.gdp1.point,
            ci(&r.gdp1),
            r.gdp2.point,
            ci(&r.gdp2),
            match r.preferred {
                GdpVariant::Unchanged => "gdp1",
                GdpVariant::Elevated => "gdp2",
            }
        )
        .unwrap();
    }
    out
}
