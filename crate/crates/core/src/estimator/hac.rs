use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, psd_repair, symmetrize};

/// Eigenvalues below this are clipped when repairing the sandwich.
const PSD_TOL: f64 = 1e-12;

/// Bartlett weights `w_j = 1 - j / (L + 1)` for `j = 0..=L`.
pub fn bartlett_weights(max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|j| 1.0 - j as f64 / (max_lag as f64 + 1.0))
        .collect()
}

/// Newey-West sandwich `(XᵀX)⁻¹ S (XᵀX)⁻¹` with
/// `S = Γ₀ + Σ_{j=1}^{L} w_j (Γ_j + Γ_jᵀ)` and
/// `Γ_j = Σ_{t>j} e_t e_{t-j} x_t x_{t-j}ᵀ`. No small-sample rescaling.
pub fn hac_covariance(
    x: &DMatrix<f64>,
    residuals: &DVector<f64>,
    max_lag: usize,
) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if residuals.len() != n {
        return Err(Error::Alignment(format!(
            "{} residuals for {n} design rows",
            residuals.len()
        )));
    }
    if max_lag >= n {
        return Err(Error::Lag { max_lag, n });
    }
    let bread = least_squares(x, &DVector::zeros(n))?.xtx_inv;

    // per-observation scores u_t = e_t x_t
    let mut scores = x.clone();
    for (mut row, e) in scores.row_iter_mut().zip(residuals.iter()) {
        row *= *e;
    }
    let weights = bartlett_weights(max_lag);
    let mut meat = scores.transpose() * &scores;
    for (j, w) in weights.iter().enumerate().skip(1) {
        let lead = scores.rows(j, n - j);
        let lag = scores.rows(0, n - j);
        let gamma = lead.transpose() * lag;
        meat += (&gamma + gamma.transpose()) * *w;
    }
    let sandwich = symmetrize(&bread * meat * &bread);
    let (repaired, clipped) = psd_repair(sandwich, PSD_TOL);
    if clipped {
        log::warn!("HAC covariance was indefinite; negative eigenvalues clipped to zero");
    }
    Ok(repaired)
}

/// Heteroscedasticity-robust (HC0) covariance.
pub fn white_covariance(x: &DMatrix<f64>, residuals: &DVector<f64>) -> Result<DMatrix<f64>> {
    hac_covariance(x, residuals, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_at_lag_seven() {
        let w = bartlett_weights(7);
        let expected: Vec<f64> = (0..=7).map(|j| (8 - j) as f64 / 8.0).collect();
        assert_eq!(w.len(), 8);
        for (a, b) in w.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(bartlett_weights(0), vec![1.0]);
    }

    #[test]
    fn lag_must_be_below_n() {
        let x = DMatrix::from_element(5, 1, 1.0);
        let e = DVector::from_element(5, 0.1);
        assert!(matches!(
            hac_covariance(&x, &e, 5),
            Err(Error::Lag { max_lag: 5, n: 5 })
        ));
    }
}
