//! Model fitting: OLS with classical or Newey-West covariance, and linear
//! regression with AR(1) errors by exact maximum likelihood.

mod ar1;
mod hac;
mod ols;

pub use ar1::{ar1_profile_loglik, ar1_whiten, fit_ar1_ml, Ar1Profile, PHI_BOUND, PHI_TOL};
pub use hac::{bartlett_weights, hac_covariance, white_covariance};
pub use ols::fit_ols;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::features::{Column, DesignMatrix, ErrorModel};

/// Error-scale parameters of a fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScaleParams {
    /// OLS residual variance `s² = SSR / (n - p)`.
    Ols { s2: f64 },
    /// AR(1) innovation variance and autoregressive coefficient.
    Ar1 { sigma2: f64, phi: f64 },
}

impl ScaleParams {
    /// Marginal variance of the error term: `s²` for OLS,
    /// `σ² / (1 - φ²)` for AR(1).
    pub fn marginal_variance(&self) -> f64 {
        match *self {
            ScaleParams::Ols { s2 } => s2,
            ScaleParams::Ar1 { sigma2, phi } => sigma2 / (1.0 - phi * phi),
        }
    }

    pub fn phi(&self) -> Option<f64> {
        match *self {
            ScaleParams::Ar1 { phi, .. } => Some(phi),
            ScaleParams::Ols { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    /// Regressor names; empty when fitted on a bare matrix.
    pub columns: Vec<Column>,
    pub beta: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub scale: ScaleParams,
    pub error_model: ErrorModel,
    pub n: usize,
    /// Number of regression coefficients.
    pub p: usize,
    pub r_squared: f64,
    pub log_likelihood: f64,
    pub aic: f64,
}

impl FittedModel {
    /// Estimated parameters counted by the AIC: coefficients plus σ² (and φ).
    pub fn n_estimated(&self) -> usize {
        match self.scale {
            ScaleParams::Ols { .. } => self.p + 1,
            ScaleParams::Ar1 { .. } => self.p + 2,
        }
    }

    pub fn std_errors(&self) -> DVector<f64> {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }

    pub fn coefficient(&self, col: Column) -> Option<f64> {
        self.column_index(col).map(|j| self.beta[j])
    }

    pub fn column_index(&self, col: Column) -> Option<usize> {
        self.columns.iter().position(|c| *c == col)
    }

    /// Two-sided normal-approximation p-value for coefficient `j`.
    pub fn p_value(&self, j: usize) -> f64 {
        let se = self.covariance[(j, j)].max(0.0).sqrt();
        two_sided_p(self.beta[j], se)
    }
}

/// Two-sided p-value of `estimate / se` under the standard normal.
pub fn two_sided_p(estimate: f64, se: f64) -> f64 {
    if se == 0.0 {
        return if estimate == 0.0 { 1.0 } else { 0.0 };
    }
    let z = (estimate / se).abs();
    2.0 * Normal::standard().sf(z)
}

/// Fits `design` according to its spec's error model.
pub fn fit(design: &DesignMatrix) -> Result<FittedModel> {
    let x = design.x();
    let y = design.y();
    let mut model = match design.spec().error_model {
        ErrorModel::Iid => fit_ols(x, y)?,
        ErrorModel::Hac => {
            let mut m = fit_ols(x, y)?;
            let resid = y - x * &m.beta;
            m.covariance = hac_covariance(x, &resid, design.spec().hac_max_lag)?;
            m.error_model = ErrorModel::Hac;
            m
        }
        ErrorModel::Ar1 => fit_ar1_ml(x, y)?,
    };
    model.columns = design.columns().to_vec();
    Ok(model)
}

/// R², Gaussian log-likelihood (ML variance convention) and AIC of `beta`
/// and `scale` on `(x, y)`. For AR(1) models the likelihood is the exact
/// stationary one at the stored φ, and R² is computed on the unwhitened scale.
pub fn model_statistics(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    scale: &ScaleParams,
) -> Result<(f64, f64, f64)> {
    let n = y.len();
    let p = beta.len();
    if x.nrows() != n || x.ncols() != p {
        return Err(Error::Alignment("model and design disagree in shape".into()));
    }
    let resid = y - x * beta;
    let ssr = resid.norm_squared();
    let mean = y.mean();
    let tss = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let r_squared = if tss > 0.0 { 1.0 - ssr / tss } else { 1.0 };
    let (log_likelihood, k) = match *scale {
        ScaleParams::Ols { .. } => (gaussian_loglik(ssr, n, 0.0), p + 1),
        ScaleParams::Ar1 { phi, .. } => {
            let w = ar1::whiten_vector(&resid, phi);
            let ll = gaussian_loglik(w.norm_squared(), n, 0.5 * (1.0 - phi * phi).ln());
            (ll, p + 2)
        }
    };
    Ok((r_squared, log_likelihood, aic(log_likelihood, k)))
}

/// Concentrated Gaussian log-likelihood with σ² = SSR/n plus an extra
/// log-Jacobian term.
pub(crate) fn gaussian_loglik(ssr: f64, n: usize, log_jacobian: f64) -> f64 {
    let nf = n as f64;
    if ssr <= 0.0 {
        return f64::INFINITY;
    }
    -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + (ssr / nf).ln() + 1.0) + log_jacobian
}

pub fn aic(log_likelihood: f64, n_params: usize) -> f64 {
    2.0 * n_params as f64 - 2.0 * log_likelihood
}
