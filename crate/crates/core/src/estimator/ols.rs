use nalgebra::{DMatrix, DVector};

use super::{model_statistics, FittedModel, ScaleParams};
use crate::error::Result;
use crate::features::ErrorModel;
use crate::linalg::least_squares;

/// Ordinary least squares with the classical covariance `s²(XᵀX)⁻¹`,
/// `s² = SSR / (n - p)`.
pub fn fit_ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<FittedModel> {
    let (n, p) = x.shape();
    let ls = least_squares(x, y)?;
    let s2 = ls.ssr / (n - p) as f64;
    let scale = ScaleParams::Ols { s2 };
    let (r_squared, log_likelihood, aic) = model_statistics(x, y, &ls.beta, &scale)?;
    Ok(FittedModel {
        columns: Vec::new(),
        covariance: &ls.xtx_inv * s2,
        beta: ls.beta,
        scale,
        error_model: ErrorModel::Iid,
        n,
        p,
        r_squared,
        log_likelihood,
        aic,
    })
}
