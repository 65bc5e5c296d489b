//! Raw input parsing and alignment.
//!
//! Hourly day-ahead quantities are summed to daily load, station temperatures
//! are averaged, and both are merged onto a gap-free daily calendar. The
//! result, [`DailySeries`], is the only input the modelling code accepts.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sanity band for daily mean temperatures, °F.
pub const TEMP_MIN_F: f64 = -40.0;
pub const TEMP_MAX_F: f64 = 130.0;

/// How hours are numbered in the hourly load file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HourConvention {
    /// 1..=24 (1..=25 on the autumn DST day), as published by GME.
    #[default]
    #[serde(rename = "1-24")]
    OneBased,
    /// 0..=23 (0..=24 on the autumn DST day).
    #[serde(rename = "0-23")]
    ZeroBased,
}

impl HourConvention {
    /// Maps a raw hour label to a 0-based index, or `None` when out of range.
    pub fn to_index(self, raw: i64) -> Option<u8> {
        let idx = match self {
            HourConvention::OneBased => raw - 1,
            HourConvention::ZeroBased => raw,
        };
        (0..=24).contains(&idx).then_some(idx as u8)
    }

    pub fn label(self, index: u8) -> i64 {
        match self {
            HourConvention::OneBased => index as i64 + 1,
            HourConvention::ZeroBased => index as i64,
        }
    }
}

impl FromStr for HourConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1-24" => Ok(HourConvention::OneBased),
            "0-23" => Ok(HourConvention::ZeroBased),
            other => Err(Error::Config(format!(
                "unknown hour convention {other:?} (expected \"1-24\" or \"0-23\")"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TempUnit {
    #[default]
    F,
    C,
}

impl TempUnit {
    pub fn to_fahrenheit(self, value: f64) -> f64 {
        match self {
            TempUnit::F => value,
            TempUnit::C => value * 9.0 / 5.0 + 32.0,
        }
    }
}

impl FromStr for TempUnit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "F" | "f" => Ok(TempUnit::F),
            "C" | "c" => Ok(TempUnit::C),
            other => Err(Error::Config(format!("unknown temperature unit {other:?}"))),
        }
    }
}

/// What to do about dates missing from an input inside the requested span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FillPolicy {
    #[default]
    #[serde(rename = "error")]
    Error,
    /// Linear interpolation of interior temperature gaps. Load is never filled.
    #[serde(rename = "interpolate-linear")]
    InterpolateLinear,
}

impl FromStr for FillPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "error" => Ok(FillPolicy::Error),
            "interpolate-linear" => Ok(FillPolicy::InterpolateLinear),
            other => Err(Error::Config(format!("unknown fill policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyLoadRecord {
    pub date: NaiveDate,
    /// 0-based hour of day; 24 only on a 25-hour day.
    pub hour: u8,
    pub quantity_mwh: f64,
}

/// One aligned day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyObservation {
    pub date: NaiveDate,
    pub load_mwh: f64,
    pub temp_f: f64,
}

/// Gap-free daily series of load and temperature.
///
/// Construction validates that dates are consecutive, load is positive and
/// temperature lies within [`TEMP_MIN_F`, `TEMP_MAX_F`].
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    obs: Vec<DailyObservation>,
}

impl DailySeries {
    pub fn new(obs: Vec<DailyObservation>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::Data("daily series is empty".into()));
        }
        let mut missing = Vec::new();
        for pair in obs.windows(2) {
            let (a, b) = (pair[0].date, pair[1].date);
            if b <= a {
                return Err(Error::Data(format!(
                    "dates not strictly increasing: {a} followed by {b}"
                )));
            }
            let mut d = a.succ_opt().expect("date overflow");
            while d < b {
                missing.push(d);
                d = d.succ_opt().expect("date overflow");
            }
        }
        if !missing.is_empty() {
            return Err(Error::Gap {
                what: "daily series",
                missing,
            });
        }
        for o in &obs {
            check_load(o.date, o.load_mwh)?;
            check_temp(o.date, o.temp_f)?;
        }
        Ok(Self { obs })
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.obs[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.obs[self.obs.len() - 1].date
    }

    pub fn observations(&self) -> &[DailyObservation] {
        &self.obs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DailyObservation> {
        self.obs.iter()
    }

    /// Canonical daily CSV (`date,load_mwh,temp_f`). Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,load_mwh,temp_f\n");
        for o in &self.obs {
            writeln!(out, "{},{},{}", o.date, o.load_mwh, o.temp_f).unwrap();
        }
        out
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv_reader(reader);
        expect_header(&mut rdr, &["date", "load_mwh", "temp_f"])?;
        let mut obs = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = line_of(&rec);
            expect_fields(&rec, 3, line)?;
            obs.push(DailyObservation {
                date: parse_date(&rec[0], line)?,
                load_mwh: parse_f64(&rec[1], line)?,
                temp_f: parse_f64(&rec[2], line)?,
            });
        }
        Self::new(obs)
    }
}

fn check_load(date: NaiveDate, load: f64) -> Result<()> {
    if !(load.is_finite() && load > 0.0) {
        return Err(Error::Domain(format!(
            "load on {date} is {load}; must be positive and finite"
        )));
    }
    Ok(())
}

fn check_temp(date: NaiveDate, temp_f: f64) -> Result<()> {
    if !(temp_f.is_finite() && (TEMP_MIN_F..=TEMP_MAX_F).contains(&temp_f)) {
        return Err(Error::Domain(format!(
            "temperature on {date} is {temp_f} °F, outside [{TEMP_MIN_F}, {TEMP_MAX_F}]"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HolidayCategory {
    /// Official public holidays.
    Major,
    /// Other observances.
    Minor,
}

impl FromStr for HolidayCategory {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "major" => Ok(HolidayCategory::Major),
            "minor" => Ok(HolidayCategory::Minor),
            other => Err(Error::Data(format!("unknown holiday category {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HolidayCalendar {
    days: BTreeMap<NaiveDate, HolidayCategory>,
}

impl HolidayCalendar {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a date; a date may carry only one category.
    pub fn insert(&mut self, date: NaiveDate, category: HolidayCategory) -> Result<()> {
        if self.days.insert(date, category).is_some() {
            return Err(Error::DuplicateKey {
                key: date.to_string(),
                line: 0,
            });
        }
        Ok(())
    }

    pub fn get(&self, date: NaiveDate) -> Option<HolidayCategory> {
        self.days.get(&date).copied()
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, HolidayCategory)> + '_ {
        self.days.iter().map(|(d, c)| (*d, *c))
    }

    /// Keeps only entries inside `[first, last]`, logging a warning for the rest.
    pub fn restricted_to(&self, first: NaiveDate, last: NaiveDate) -> Self {
        let outside = self
            .days
            .keys()
            .filter(|d| **d < first || **d > last)
            .count();
        if outside > 0 {
            log::warn!("{outside} holiday entries outside {first}..{last} ignored");
        }
        Self {
            days: self.days.range(first..=last).map(|(d, c)| (*d, *c)).collect(),
        }
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv_reader(reader);
        expect_header(&mut rdr, &["date", "category"])?;
        let mut cal = Self::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = line_of(&rec);
            expect_fields(&rec, 2, line)?;
            let date = parse_date(&rec[0], line)?;
            let category = rec[1].parse::<HolidayCategory>().map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if cal.days.insert(date, category).is_some() {
                return Err(Error::DuplicateKey {
                    key: date.to_string(),
                    line,
                });
            }
        }
        Ok(cal)
    }

    /// CSV with header `date,category`, sorted by date.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,category\n");
        for (d, c) in self.iter() {
            let label = match c {
                HolidayCategory::Major => "major",
                HolidayCategory::Minor => "minor",
            };
            let _ = writeln!(out, "{d},{label}");
        }
        out
    }

    /// Italian national holidays (major) and common observances (minor) for
    /// the given years. Major wins when both fall on one date.
    pub fn italian(first_year: i32, last_year: i32) -> Self {
        const MAJOR: [(u32, u32); 10] = [
            (1, 1),
            (1, 6),
            (4, 25),
            (5, 1),
            (6, 2),
            (8, 15),
            (11, 1),
            (12, 8),
            (12, 25),
            (12, 26),
        ];
        let mut days = BTreeMap::new();
        for year in first_year..=last_year {
            let easter = easter_sunday(year);
            for (m, d) in MAJOR {
                days.insert(ymd(year, m, d), HolidayCategory::Major);
            }
            days.insert(easter + chrono::Days::new(1), HolidayCategory::Major);
            for minor in [easter, ymd(year, 12, 24), ymd(year, 12, 31)] {
                days.entry(minor).or_insert(HolidayCategory::Minor);
            }
        }
        Self { days }
    }
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

/// Gregorian Easter Sunday (anonymous computus).
pub fn easter_sunday(year: i32) -> NaiveDate {
    let a = year % 19;
    let b = year / 100;
    let c = year % 100;
    let d = b / 4;
    let e = b % 4;
    let f = (b + 8) / 25;
    let g = (b - f + 1) / 3;
    let h = (19 * a + b - d - g + 15) % 30;
    let i = c / 4;
    let k = c % 4;
    let l = (32 + 2 * e + 2 * i - h - k) % 7;
    let m = (a + 11 * h + 22 * l) / 451;
    let month = (h + l - 7 * m + 114) / 31;
    let day = (h + l - 7 * m + 114) % 31 + 1;
    ymd(year, month as u32, day as u32)
}

/// Parses an hourly load CSV with header `date,hour,quantity_mwh`.
pub fn parse_hourly_load<R: Read>(
    reader: R,
    convention: HourConvention,
) -> Result<Vec<HourlyLoadRecord>> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &["date", "hour", "quantity_mwh"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(&rec);
        expect_fields(&rec, 3, line)?;
        let date = parse_date(&rec[0], line)?;
        let raw_hour: i64 = rec[1].trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid hour {:?}", &rec[1]),
        })?;
        let hour = convention.to_index(raw_hour).ok_or_else(|| Error::Parse {
            line,
            message: format!("hour {raw_hour} outside the {convention:?} range"),
        })?;
        let quantity_mwh = parse_f64(&rec[2], line)?;
        if !(quantity_mwh.is_finite() && quantity_mwh >= 0.0) {
            return Err(Error::Parse {
                line,
                message: format!("quantity {quantity_mwh} must be non-negative and finite"),
            });
        }
        if !seen.insert((date, hour)) {
            return Err(Error::DuplicateKey {
                key: format!("{date} hour {raw_hour}"),
                line,
            });
        }
        out.push(HourlyLoadRecord {
            date,
            hour,
            quantity_mwh,
        });
    }
    Ok(out)
}

/// Sums hourly quantities per date. Days must have 23, 24 or 25 hours.
pub fn aggregate_daily(records: &[HourlyLoadRecord]) -> Result<Vec<(NaiveDate, f64)>> {
    let mut by_date: BTreeMap<NaiveDate, Vec<(u8, f64)>> = BTreeMap::new();
    for r in records {
        by_date
            .entry(r.date)
            .or_default()
            .push((r.hour, r.quantity_mwh));
    }
    let mut out = Vec::with_capacity(by_date.len());
    for (date, mut hours) in by_date {
        if !(23..=25).contains(&hours.len()) {
            return Err(Error::IncompleteDay {
                date,
                hours: hours.len(),
            });
        }
        // summation order fixed by hour so the total does not depend on row order
        hours.sort_by_key(|(h, _)| *h);
        out.push((date, hours.iter().map(|(_, q)| q).sum()));
    }
    Ok(out)
}

/// Parses a temperature CSV with header `date,temp`, converting to °F.
pub fn parse_temperature<R: Read>(reader: R, unit: TempUnit) -> Result<Vec<(NaiveDate, f64)>> {
    let mut rdr = csv_reader(reader);
    expect_header(&mut rdr, &["date", "temp"])?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = line_of(&rec);
        expect_fields(&rec, 2, line)?;
        let date = parse_date(&rec[0], line)?;
        let value = parse_f64(&rec[1], line)?;
        if !value.is_finite() {
            return Err(Error::Parse {
                line,
                message: "temperature must be finite".into(),
            });
        }
        if !seen.insert(date) {
            return Err(Error::DuplicateKey {
                key: date.to_string(),
                line,
            });
        }
        out.push((date, unit.to_fahrenheit(value)));
    }
    Ok(out)
}

/// Pointwise mean of two station series with identical date coverage.
pub fn average_station_temps(
    series_a: &[(NaiveDate, f64)],
    series_b: &[(NaiveDate, f64)],
) -> Result<Vec<(NaiveDate, f64)>> {
    let a: BTreeMap<_, _> = series_a.iter().copied().collect();
    let b: BTreeMap<_, _> = series_b.iter().copied().collect();
    if a.len() != series_a.len() || b.len() != series_b.len() {
        return Err(Error::Alignment("duplicate dates in station series".into()));
    }
    if !a.keys().eq(b.keys()) {
        let only_a = a.keys().filter(|d| !b.contains_key(d)).count();
        let only_b = b.keys().filter(|d| !a.contains_key(d)).count();
        return Err(Error::Alignment(format!(
            "station coverage differs: {only_a} date(s) only in the first, {only_b} only in the second"
        )));
    }
    Ok(a.iter().map(|(d, ta)| (*d, (ta + b[d]) / 2.0)).collect())
}

/// Aligns daily load and temperature on the inclusive span `[start, end]`.
pub fn merge_series(
    load: &[(NaiveDate, f64)],
    temp: &[(NaiveDate, f64)],
    start: NaiveDate,
    end: NaiveDate,
    fill: FillPolicy,
) -> Result<DailySeries> {
    if end < start {
        return Err(Error::Range(format!("span end {end} precedes start {start}")));
    }
    let load: BTreeMap<_, _> = load.iter().copied().collect();
    let temp: BTreeMap<_, _> = temp.iter().copied().collect();
    let span: Vec<NaiveDate> = start.iter_days().take_while(|d| *d <= end).collect();

    let missing_load: Vec<_> = span
        .iter()
        .filter(|d| !load.contains_key(d))
        .copied()
        .collect();
    if !missing_load.is_empty() {
        return Err(Error::Gap {
            what: "load",
            missing: missing_load,
        });
    }

    let mut temps = Vec::with_capacity(span.len());
    let mut missing_temp = Vec::new();
    for d in &span {
        match temp.get(d) {
            Some(t) => temps.push(*t),
            None => match fill {
                FillPolicy::Error => missing_temp.push(*d),
                FillPolicy::InterpolateLinear => match interpolate(&temp, *d) {
                    Some(t) => temps.push(t),
                    None => missing_temp.push(*d),
                },
            },
        }
    }
    if !missing_temp.is_empty() {
        return Err(Error::Gap {
            what: "temperature",
            missing: missing_temp,
        });
    }

    let obs = span
        .iter()
        .zip(temps)
        .map(|(d, t)| DailyObservation {
            date: *d,
            load_mwh: load[d],
            temp_f: t,
        })
        .collect();
    DailySeries::new(obs)
}

fn interpolate(known: &BTreeMap<NaiveDate, f64>, date: NaiveDate) -> Option<f64> {
    let (d0, t0) = known.range(..date).next_back()?;
    let (d1, t1) = known.range(date..).next()?;
    let span = (*d1 - *d0).num_days() as f64;
    let offset = (date - *d0).num_days() as f64;
    Some(t0 + (t1 - t0) * offset / span)
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn expect_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let headers = rdr.headers().map_err(csv_err)?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}, found {:?}", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn expect_fields(rec: &csv::StringRecord, n: usize, line: u64) -> Result<()> {
    if rec.len() != n {
        return Err(Error::Parse {
            line,
            message: format!("expected {n} fields, found {}", rec.len()),
        });
    }
    Ok(())
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub(crate) fn parse_date(s: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| Error::Parse {
        line,
        message: format!("invalid ISO-8601 date {s:?}"),
    })
}

fn parse_f64(s: &str, line: u64) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid number {s:?}"),
    })
}
