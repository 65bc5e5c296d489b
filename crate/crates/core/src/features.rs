//! Design matrix for the log-load fixed-effects regression.
//!
//! Columns, in order: intercept, six weekday dummies, two holiday dummies,
//! temperature and its hinge above the kink (optional), week-of-year fixed
//! effects, and week × treatment-year interactions.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{DailySeries, HolidayCalendar, HolidayCategory, TEMP_MAX_F, TEMP_MIN_F};
use crate::linalg::{pivoted_rank, RANK_TOL};

/// Inclusive range of week-of-year bins, written `first-last`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct WeekRange {
    pub first: u32,
    pub last: u32,
}

impl WeekRange {
    pub fn new(first: u32, last: u32) -> Result<Self> {
        if first < 1 || last > 53 || first > last {
            return Err(Error::Spec(format!("invalid week range {first}-{last}")));
        }
        Ok(Self { first, last })
    }

    pub fn contains(&self, week: u32) -> bool {
        (self.first..=self.last).contains(&week)
    }

    pub fn is_subset_of(&self, other: &WeekRange) -> bool {
        other.first <= self.first && self.last <= other.last
    }

    pub fn overlaps(&self, other: &WeekRange) -> bool {
        self.first <= other.last && other.first <= self.last
    }

    pub fn weeks(&self) -> impl Iterator<Item = u32> {
        self.first..=self.last
    }
}

impl fmt::Display for WeekRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.last)
    }
}

impl TryFrom<String> for WeekRange {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WeekRange> for String {
    fn from(w: WeekRange) -> String {
        w.to_string()
    }
}

impl FromStr for WeekRange {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (a, b) = s
            .split_once("..")
            .or_else(|| s.split_once('-'))
            .ok_or_else(|| Error::Spec(format!("week range {s:?} must look like 11-22")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| Error::Spec(format!("invalid week number {v:?}")))
        };
        WeekRange::new(parse(a)?, parse(b)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModel {
    /// OLS with the classical covariance.
    #[default]
    Iid,
    /// OLS with Newey-West covariance.
    Hac,
    /// Regression with AR(1) errors by exact maximum likelihood.
    Ar1,
}

impl FromStr for ErrorModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "iid" | "ols" => Ok(ErrorModel::Iid),
            "hac" => Ok(ErrorModel::Hac),
            "ar1" => Ok(ErrorModel::Ar1),
            other => Err(Error::Config(format!("unknown error model {other:?}"))),
        }
    }
}

/// How the one or two days after day 364 are binned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeekBinning {
    /// Days 365-366 join week 52 (52 bins).
    #[default]
    Fold52,
    /// Days 365-366 form their own bin 53.
    Split53,
}

/// Everything that defines one regression variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub include_temperature: bool,
    pub kink_f: f64,
    pub error_model: ErrorModel,
    pub hac_max_lag: usize,
    pub treatment_year: i32,
    pub interaction_weeks: WeekRange,
    pub treatment_weeks: WeekRange,
    pub baseline_weekday: Weekday,
    #[serde(default)]
    pub week_binning: WeekBinning,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            include_temperature: true,
            kink_f: 62.0,
            error_model: ErrorModel::Iid,
            hac_max_lag: 7,
            treatment_year: 2020,
            interaction_weeks: WeekRange { first: 1, last: 22 },
            treatment_weeks: WeekRange { first: 11, last: 22 },
            baseline_weekday: Weekday::Mon,
            week_binning: WeekBinning::Fold52,
        }
    }
}

/// The three specifications compared side by side in the reference analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Temperature terms, OLS.
    Base,
    /// No temperature terms, OLS.
    NoTemperature,
    /// Temperature terms, AR(1) errors by maximum likelihood.
    Autocorrelation,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [
        ModelVariant::Base,
        ModelVariant::NoTemperature,
        ModelVariant::Autocorrelation,
    ];

    pub fn number(self) -> u8 {
        match self {
            ModelVariant::Base => 1,
            ModelVariant::NoTemperature => 2,
            ModelVariant::Autocorrelation => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(ModelVariant::Base),
            2 => Ok(ModelVariant::NoTemperature),
            3 => Ok(ModelVariant::Autocorrelation),
            _ => Err(Error::Config(format!("model must be 1, 2 or 3, got {n}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelVariant::Base => "Base",
            ModelVariant::NoTemperature => "No temperature",
            ModelVariant::Autocorrelation => "Autocorrelation",
        }
    }

    /// Applies the variant to a base spec. OLS variants keep the base spec's
    /// covariance choice (iid or HAC).
    pub fn apply(self, base: &ModelSpec) -> ModelSpec {
        let ols_model = match base.error_model {
            ErrorModel::Ar1 => ErrorModel::Iid,
            other => other,
        };
        match self {
            ModelVariant::Base => ModelSpec {
                include_temperature: true,
                error_model: ols_model,
                ..base.clone()
            },
            ModelVariant::NoTemperature => ModelSpec {
                include_temperature: false,
                error_model: ols_model,
                ..base.clone()
            },
            ModelVariant::Autocorrelation => ModelSpec {
                include_temperature: true,
                error_model: ErrorModel::Ar1,
                ..base.clone()
            },
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.treatment_weeks.is_subset_of(&self.interaction_weeks) {
            return Err(Error::Spec(format!(
                "treatment weeks {} not inside interaction weeks {}",
                self.treatment_weeks, self.interaction_weeks
            )));
        }
        if !(self.kink_f.is_finite() && (TEMP_MIN_F..=TEMP_MAX_F).contains(&self.kink_f)) {
            return Err(Error::Spec(format!(
                "kink {} °F outside the temperature sanity band",
                self.kink_f
            )));
        }
        Ok(())
    }

    pub fn week_of(&self, date: NaiveDate) -> u32 {
        week_index_with(date, self.week_binning)
    }
}

/// 7-day bin counted from January 1; days 365-366 fold into week 52.
pub fn week_index(date: NaiveDate) -> u32 {
    week_index_with(date, WeekBinning::Fold52)
}

pub fn week_index_with(date: NaiveDate, binning: WeekBinning) -> u32 {
    let w = (date.ordinal() - 1) / 7 + 1;
    match binning {
        WeekBinning::Fold52 => w.min(52),
        WeekBinning::Split53 => w,
    }
}

/// Returns `(temp, max(temp - k, 0))`.
pub fn piecewise_temperature(temp: f64, kink: f64) -> (f64, f64) {
    (temp, (temp - kink).max(0.0))
}

/// One named regressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    Intercept,
    Weekday(Weekday),
    HolidayMajor,
    HolidayMinor,
    Temperature,
    TemperatureHinge,
    WeekFixedEffect(u32),
    Interaction { week: u32, year: i32 },
}

impl Column {
    pub fn name(&self) -> String {
        match self {
            Column::Intercept => "intercept".into(),
            Column::Weekday(d) => weekday_name(*d).into(),
            Column::HolidayMajor => "holiday_major".into(),
            Column::HolidayMinor => "holiday_minor".into(),
            Column::Temperature => "temp".into(),
            Column::TemperatureHinge => "temp_hinge".into(),
            Column::WeekFixedEffect(w) => format!("week_{w}"),
            Column::Interaction { week, year } => format!("week_{week}_x_{year}"),
        }
    }

    /// Row label in the style of the published coefficient table.
    pub fn table_label(&self, kink: f64) -> String {
        match self {
            Column::Intercept => "Intercept".into(),
            Column::Weekday(d) => {
                let n = weekday_name(*d);
                let mut c = n.chars();
                let first = c.next().unwrap().to_ascii_uppercase();
                format!("{first}{}", c.as_str())
            }
            Column::HolidayMajor => "d_holiday1".into(),
            Column::HolidayMinor => "d_holiday2".into(),
            Column::Temperature => "Temp".into(),
            Column::TemperatureHinge => format!("(Temp-{kink})d_{kink}"),
            Column::WeekFixedEffect(w) => format!("week_{w}"),
            Column::Interaction { week, year } => format!("week_{week},{year}"),
        }
    }

    pub fn is_temperature(&self) -> bool {
        matches!(self, Column::Temperature | Column::TemperatureHinge)
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Column {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Data(format!("unknown column name {s:?}"));
        Ok(match s {
            "intercept" => Column::Intercept,
            "holiday_major" => Column::HolidayMajor,
            "holiday_minor" => Column::HolidayMinor,
            "temp" => Column::Temperature,
            "temp_hinge" => Column::TemperatureHinge,
            _ => {
                if let Ok(d) = s.parse::<Weekday>() {
                    Column::Weekday(d)
                } else if let Some(rest) = s.strip_prefix("week_") {
                    match rest.split_once("_x_") {
                        Some((w, y)) => Column::Interaction {
                            week: w.parse().map_err(|_| bad())?,
                            year: y.parse().map_err(|_| bad())?,
                        },
                        None => Column::WeekFixedEffect(rest.parse().map_err(|_| bad())?),
                    }
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

fn weekday_name(d: Weekday) -> &'static str {
    match d {
        Weekday::Mon => "mon",
        Weekday::Tue => "tue",
        Weekday::Wed => "wed",
        Weekday::Thu => "thu",
        Weekday::Fri => "fri",
        Weekday::Sat => "sat",
        Weekday::Sun => "sun",
    }
}

/// Response vector and named regressor matrix, one row per day.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    dates: Vec<NaiveDate>,
    y: DVector<f64>,
    x: DMatrix<f64>,
    columns: Vec<Column>,
    spec: ModelSpec,
}

impl DesignMatrix {
    /// Assembles a design from raw parts, checking only dimensions.
    pub fn from_parts(
        dates: Vec<NaiveDate>,
        y: DVector<f64>,
        x: DMatrix<f64>,
        columns: Vec<Column>,
        spec: ModelSpec,
    ) -> Result<Self> {
        if dates.len() != y.len() || x.nrows() != y.len() || x.ncols() != columns.len() {
            return Err(Error::Alignment(format!(
                "design parts disagree: {} dates, {} responses, {}x{} regressors, {} names",
                dates.len(),
                y.len(),
                x.nrows(),
                x.ncols(),
                columns.len()
            )));
        }
        Ok(Self {
            dates,
            y,
            x,
            columns,
            spec,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, col: Column) -> Option<usize> {
        self.columns.iter().position(|c| *c == col)
    }

    /// Indices of the interaction columns zeroed in the counterfactual.
    pub fn treatment_columns(&self) -> Vec<usize> {
        treatment_columns(&self.columns, &self.spec)
    }

    /// Same rows with the temperature columns removed.
    pub fn without_temperature(&self) -> Self {
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&j| !self.columns[j].is_temperature())
            .collect();
        let x = self.x.select_columns(&keep);
        Self {
            dates: self.dates.clone(),
            y: self.y.clone(),
            x,
            columns: keep.iter().map(|&j| self.columns[j]).collect(),
            spec: ModelSpec {
                include_temperature: false,
                ..self.spec.clone()
            },
        }
    }

    /// The same rows arranged for `variant`: temperature columns dropped for
    /// the no-temperature model and the error model switched.
    pub fn for_variant(&self, variant: ModelVariant) -> Self {
        let spec = variant.apply(&self.spec);
        let mut out = if spec.include_temperature || !self.spec.include_temperature {
            self.clone()
        } else {
            self.without_temperature()
        };
        out.spec = spec;
        out.spec.include_temperature = out.columns.iter().any(Column::is_temperature);
        out
    }

    /// Row indices whose date falls in `[start, end]`.
    pub fn rows_between(&self, start: NaiveDate, end: NaiveDate) -> Vec<usize> {
        self.dates
            .iter()
            .enumerate()
            .filter(|(_, d)| **d >= start && **d <= end)
            .map(|(i, _)| i)
            .collect()
    }

    /// CSV dump with header `date,y,<column names>`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,y");
        for c in &self.columns {
            out.push(',');
            out.push_str(&c.name());
        }
        out.push('\n');
        for i in 0..self.nrows() {
            write!(out, "{},{}", self.dates[i], self.y[i]).unwrap();
            for j in 0..self.ncols() {
                write!(out, ",{}", self.x[(i, j)]).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn treatment_columns(columns: &[Column], spec: &ModelSpec) -> Vec<usize> {
    columns
        .iter()
        .enumerate()
        .filter(|(_, c)| match c {
            Column::Interaction { week, year } => {
                *year == spec.treatment_year && spec.treatment_weeks.contains(*week)
            }
            _ => false,
        })
        .map(|(j, _)| j)
        .collect()
}

/// Builds `y = ln(load)` and the regressor matrix for `series`.
pub fn build_design_matrix(
    series: &DailySeries,
    holidays: &HolidayCalendar,
    spec: &ModelSpec,
) -> Result<DesignMatrix> {
    spec.validate()?;
    let holidays = holidays.restricted_to(series.first_date(), series.last_date());
    let obs = series.observations();
    let n = obs.len();

    let weeks: Vec<u32> = obs.iter().map(|o| spec.week_of(o.date)).collect();
    let present: BTreeSet<u32> = weeks.iter().copied().collect();
    let fe_weeks: Vec<u32> = present.iter().skip(1).copied().collect();
    let interaction_weeks: Vec<u32> = obs
        .iter()
        .zip(&weeks)
        .filter(|(o, w)| o.date.year() == spec.treatment_year && spec.interaction_weeks.contains(**w))
        .map(|(_, w)| *w)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut columns = vec![Column::Intercept];
    let mut day = spec.baseline_weekday;
    for _ in 0..6 {
        day = day.succ();
        columns.push(Column::Weekday(day));
    }
    columns.push(Column::HolidayMajor);
    columns.push(Column::HolidayMinor);
    if spec.include_temperature {
        columns.push(Column::Temperature);
        columns.push(Column::TemperatureHinge);
    }
    columns.extend(fe_weeks.iter().map(|w| Column::WeekFixedEffect(*w)));
    columns.extend(interaction_weeks.iter().map(|w| Column::Interaction {
        week: *w,
        year: spec.treatment_year,
    }));

    let mut y = DVector::zeros(n);
    let mut x = DMatrix::zeros(n, columns.len());
    for (i, o) in obs.iter().enumerate() {
        if !(o.load_mwh > 0.0) {
            return Err(Error::Domain(format!(
                "load on {} is {}; log undefined",
                o.date, o.load_mwh
            )));
        }
        y[i] = o.load_mwh.ln();
        let (lin, hinge) = piecewise_temperature(o.temp_f, spec.kink_f);
        let holiday = holidays.get(o.date);
        for (j, col) in columns.iter().enumerate() {
            x[(i, j)] = match col {
                Column::Intercept => 1.0,
                Column::Weekday(d) => indicator(o.date.weekday() == *d),
                Column::HolidayMajor => indicator(holiday == Some(HolidayCategory::Major)),
                Column::HolidayMinor => indicator(holiday == Some(HolidayCategory::Minor)),
                Column::Temperature => lin,
                Column::TemperatureHinge => hinge,
                Column::WeekFixedEffect(w) => indicator(weeks[i] == *w),
                Column::Interaction { week, year } => {
                    indicator(weeks[i] == *week && o.date.year() == *year)
                }
            };
        }
    }

    check_columns(&x, &columns)?;
    Ok(DesignMatrix {
        dates: obs.iter().map(|o| o.date).collect(),
        y,
        x,
        columns,
        spec: spec.clone(),
    })
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Rejects all-zero columns, duplicated columns, and numerical rank deficiency.
fn check_columns(x: &DMatrix<f64>, columns: &[Column]) -> Result<()> {
    let zero: Vec<String> = (0..x.ncols())
        .filter(|&j| x.column(j).iter().all(|v| *v == 0.0))
        .map(|j| format!("{} (all zero)", columns[j]))
        .collect();
    if !zero.is_empty() {
        return Err(Error::Collinearity { columns: zero });
    }
    for a in 0..x.ncols() {
        for b in a + 1..x.ncols() {
            if x.column(a) == x.column(b) {
                return Err(Error::Collinearity {
                    columns: vec![columns[a].name(), columns[b].name()],
                });
            }
        }
    }
    let pr = pivoted_rank(x, RANK_TOL);
    if pr.rank < x.ncols() {
        return Err(Error::Collinearity {
            columns: pr
                .dependent_columns()
                .iter()
                .map(|&j| columns[j].name())
                .collect(),
        });
    }
    Ok(())
}
