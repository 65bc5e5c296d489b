//! Fitted-model documents and coefficient tables.

use std::fmt::Write as _;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{FittedModel, ScaleParams};
use crate::features::{Column, DesignMatrix, ModelSpec, ModelVariant};

/// Table row for one coefficient. Values other than the intercept are
/// multiplied by 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub column: String,
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    /// `None` when the standard error is zero.
    pub z: Option<f64>,
    pub p_value: f64,
    pub stars: String,
    pub scaled_by_100: bool,
}

/// Serialized fit: raw coefficients and covariance for reuse by later
/// commands, plus a readable table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub model: u8,
    pub label: String,
    pub spec: ModelSpec,
    pub sample_start: NaiveDate,
    pub sample_end: NaiveDate,
    pub n: usize,
    pub p: usize,
    pub columns: Vec<String>,
    pub beta: Vec<f64>,
    /// Row-major.
    pub covariance: Vec<Vec<f64>>,
    pub scale: ScaleParams,
    pub r_squared: f64,
    pub log_likelihood: f64,
    pub aic: f64,
    pub table: Vec<CoefficientRow>,
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

impl ModelDocument {
    pub fn new(variant: ModelVariant, model: &FittedModel, design: &DesignMatrix) -> Result<Self> {
        if model.columns != design.columns() {
            return Err(Error::Alignment("model and design columns differ".into()));
        }
        let dates = design.dates();
        let se = model.std_errors();
        let kink = design.spec().kink_f;
        let table = model
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let scale = if *c == Column::Intercept { 1.0 } else { 100.0 };
                let p_value = model.p_value(j);
                CoefficientRow {
                    column: c.name(),
                    label: c.table_label(kink),
                    estimate: model.beta[j] * scale,
                    std_error: se[j] * scale,
                    z: (se[j] > 0.0).then(|| model.beta[j] / se[j]),
                    p_value,
                    stars: stars(p_value).into(),
                    scaled_by_100: scale != 1.0,
                }
            })
            .collect();
        Ok(Self {
            model: variant.number(),
            label: variant.label().into(),
            spec: design.spec().clone(),
            sample_start: dates[0],
            sample_end: dates[dates.len() - 1],
            n: model.n,
            p: model.p,
            columns: model.columns.iter().map(Column::name).collect(),
            beta: model.beta.iter().copied().collect(),
            covariance: model
                .covariance
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            scale: model.scale,
            r_squared: model.r_squared,
            log_likelihood: model.log_likelihood,
            aic: model.aic,
            table,
        })
    }

    pub fn variant(&self) -> Result<ModelVariant> {
        ModelVariant::from_number(self.model)
    }

    /// Rebuilds the fitted model exactly.
    pub fn to_model(&self) -> Result<FittedModel> {
        let p = self.beta.len();
        if self.columns.len() != p
            || self.covariance.len() != p
            || self.covariance.iter().any(|r| r.len() != p)
        {
            return Err(Error::Data("model document has inconsistent dimensions".into()));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| c.parse::<Column>())
            .collect::<Result<Vec<_>>>()?;
        Ok(FittedModel {
            columns,
            beta: DVector::from_vec(self.beta.clone()),
            covariance: DMatrix::from_fn(p, p, |i, j| self.covariance[i][j]),
            scale: self.scale,
            error_model: self.spec.error_model,
            n: self.n,
            p: self.p,
            r_squared: self.r_squared,
            log_likelihood: self.log_likelihood,
            aic: self.aic,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn is_shown(column: &str) -> bool {
    !matches!(column.parse::<Column>(), Ok(Column::WeekFixedEffect(_)))
}

/// Side-by-side coefficient table. Week fixed effects are summarised in a
/// single row; columns absent from a model print `-`.
pub fn coefficient_table(docs: &[ModelDocument]) -> String {
    let mut rows: Vec<(String, String)> = Vec::new();
    for d in docs {
        for r in d.table.iter().filter(|r| is_shown(&r.column)) {
            if !rows.iter().any(|(c, _)| *c == r.column) {
                rows.push((r.column.clone(), r.label.clone()));
            }
        }
    }
    // keep the design's natural order: Model 1 usually holds every row
    rows.sort_by_key(|(c, _)| {
        c.parse::<Column>()
            .map(|col| column_rank(&col))
            .unwrap_or((u8::MAX, 0))
    });

    let width = 16usize;
    let mut out = String::new();
    let _ = write!(out, "{:<22}", "");
    for d in docs {
        let _ = write!(out, "{:>width$}{:>10}", format!("Model {}", d.model), "");
    }
    out.push('\n');
    let _ = write!(out, "{:<22}", "");
    for d in docs {
        let _ = write!(out, "{:>width$}{:>10}", d.label, "");
    }
    out.push('\n');
    let _ = write!(out, "{:<22}", "");
    for _ in docs {
        let _ = write!(out, "{:>width$}{:>10}", "coef", "se");
    }
    out.push('\n');

    for (column, label) in &rows {
        let _ = write!(out, "{label:<22}");
        for d in docs {
            match d.table.iter().find(|r| r.column == *column) {
                Some(r) => {
                    let _ = write!(
                        out,
                        "{:>width$}{:>10}",
                        format!("{:.2}{:<3}", r.estimate, r.stars),
                        format!("{:.2}", r.std_error)
                    );
                }
                None => {
                    let _ = write!(out, "{:>width$}{:>10}", "-   ", "-");
                }
            }
        }
        out.push('\n');
    }

    let summary_row = |out: &mut String, name: &str, f: &dyn Fn(&ModelDocument) -> String| {
        let _ = write!(out, "{name:<22}");
        for d in docs {
            let _ = write!(out, "{:>width$}{:>10}", f(d), "");
        }
        out.push('\n');
    };
    summary_row(&mut out, "weekly FE", &|d| {
        let any = d.columns.iter().any(|c| !is_shown(c));
        (if any { "YES" } else { "NO" }).into()
    });
    summary_row(&mut out, "phi", &|d| match d.scale {
        ScaleParams::Ar1 { phi, .. } => format!("{phi:.2}"),
        ScaleParams::Ols { .. } => "NO".into(),
    });
    summary_row(&mut out, "R2", &|d| format!("{:.3}", d.r_squared));
    summary_row(&mut out, "Log-lik", &|d| format!("{:.2}", d.log_likelihood));
    summary_row(&mut out, "AIC", &|d| format!("{:.2}", d.aic));
    summary_row(&mut out, "N", &|d| d.n.to_string());
    out.push_str(
        "All parameters except the intercept multiplied by 100. \
         Significance: * p<0.05, ** p<0.01, *** p<0.001.\n",
    );
    out
}

fn column_rank(c: &Column) -> (u8, i64) {
    match *c {
        Column::Intercept => (0, 0),
        Column::Weekday(d) => (1, (d.num_days_from_monday() as i64 + 6) % 7),
        Column::HolidayMajor => (2, 0),
        Column::HolidayMinor => (3, 0),
        Column::Temperature => (4, 0),
        Column::TemperatureHinge => (5, 0),
        Column::WeekFixedEffect(w) => (6, w as i64),
        Column::Interaction { week, year } => (7, year as i64 * 100 + week as i64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.0009), "***");
        assert_eq!(stars(0.001), "**");
        assert_eq!(stars(0.0099), "**");
        assert_eq!(stars(0.01), "*");
        assert_eq!(stars(0.049), "*");
        assert_eq!(stars(0.05), "");
    }
}
