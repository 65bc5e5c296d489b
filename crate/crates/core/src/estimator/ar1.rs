//! Exact maximum likelihood for `y = Xβ + u`, `u_t = φ u_{t-1} + ε_t`,
//! `ε_t ~ N(0, σ²)`, with the stationary distribution for `u_1`.
//!
//! β and σ² are concentrated out: for a given φ the rows are whitened with
//! the Prais-Winsten transform and the whitened regression is solved by QR.
//! φ itself is found by a coarse grid followed by Brent's method.

use nalgebra::{DMatrix, DVector};

use super::{gaussian_loglik, model_statistics, FittedModel, ScaleParams};
use crate::error::{Error, Result};
use crate::features::ErrorModel;
use crate::linalg::least_squares;

/// Search interval for φ is `(-PHI_BOUND, PHI_BOUND)`.
pub const PHI_BOUND: f64 = 0.999;
/// Absolute tolerance on φ̂.
pub const PHI_TOL: f64 = 1e-6;

const GRID_POINTS: usize = 21;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone)]
pub struct Ar1Profile {
    pub phi: f64,
    pub log_likelihood: f64,
    pub beta: DVector<f64>,
    /// ML innovation variance, whitened SSR / n.
    pub sigma2: f64,
    /// (X̃ᵀX̃)⁻¹ of the whitened regressors.
    pub whitened_xtx_inv: DMatrix<f64>,
}

/// Prais-Winsten transform: first row scaled by √(1-φ²), later rows
/// quasi-differenced.
pub fn ar1_whiten(x: &DMatrix<f64>, y: &DVector<f64>, phi: f64) -> (DMatrix<f64>, DVector<f64>) {
    let (n, p) = x.shape();
    let lead = (1.0 - phi * phi).sqrt();
    let mut xw = DMatrix::zeros(n, p);
    for j in 0..p {
        let src = x.column(j);
        let mut dst = xw.column_mut(j);
        if n > 0 {
            dst[0] = lead * src[0];
        }
        for t in 1..n {
            dst[t] = src[t] - phi * src[t - 1];
        }
    }
    (xw, whiten_vector(y, phi))
}

pub(crate) fn whiten_vector(v: &DVector<f64>, phi: f64) -> DVector<f64> {
    let n = v.len();
    let mut out = DVector::zeros(n);
    if n > 0 {
        out[0] = (1.0 - phi * phi).sqrt() * v[0];
    }
    for t in 1..n {
        out[t] = v[t] - phi * v[t - 1];
    }
    out
}

/// Exact log-likelihood at `phi`, concentrated over β and σ².
pub fn ar1_profile_loglik(x: &DMatrix<f64>, y: &DVector<f64>, phi: f64) -> Result<Ar1Profile> {
    if !(phi.is_finite() && phi.abs() < 1.0) {
        return Err(Error::Stationarity(phi));
    }
    let n = y.len();
    let (xw, yw) = ar1_whiten(x, y, phi);
    let ls = least_squares(&xw, &yw)?;
    let log_likelihood = gaussian_loglik(ls.ssr, n, 0.5 * (1.0 - phi * phi).ln());
    Ok(Ar1Profile {
        phi,
        log_likelihood,
        beta: ls.beta,
        sigma2: ls.ssr / n as f64,
        whitened_xtx_inv: ls.xtx_inv,
    })
}

/// Maximizes the profile likelihood over φ and returns the GLS fit at φ̂.
/// The covariance is `σ̂² (X̃ᵀX̃)⁻¹`; the AIC counts σ² and φ.
pub fn fit_ar1_ml(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<FittedModel> {
    let (n, p) = x.shape();
    if n <= p + 1 {
        return Err(Error::InsufficientData { n, p: p + 1 });
    }
    let mut trace: Vec<(f64, f64)> = Vec::new();
    let mut objective = |phi: f64| -> Result<f64> {
        let ll = ar1_profile_loglik(x, y, phi)?.log_likelihood;
        trace.push((phi, ll));
        Ok(-ll)
    };

    let step = 2.0 * PHI_BOUND / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| -PHI_BOUND + i as f64 * step).collect();
    let mut best = (0usize, f64::INFINITY);
    for (i, g) in grid.iter().enumerate() {
        let v = objective(*g)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let lo = grid[best.0.saturating_sub(1)];
    let hi = grid[(best.0 + 1).min(GRID_POINTS - 1)];
    let phi_hat = brent_minimize(&mut objective, lo, hi, grid[best.0], best.1, PHI_TOL)
        .map_err(|iterations| Error::Convergence {
            iterations,
            trace: format_trace(&trace),
        })??;

    let profile = ar1_profile_loglik(x, y, phi_hat)?;
    let scale = ScaleParams::Ar1 {
        sigma2: profile.sigma2,
        phi: phi_hat,
    };
    let (r_squared, log_likelihood, aic) = model_statistics(x, y, &profile.beta, &scale)?;
    Ok(FittedModel {
        columns: Vec::new(),
        covariance: &profile.whitened_xtx_inv * profile.sigma2,
        beta: profile.beta,
        scale,
        error_model: ErrorModel::Ar1,
        n,
        p,
        r_squared,
        log_likelihood,
        aic,
    })
}

fn format_trace(trace: &[(f64, f64)]) -> String {
    trace
        .iter()
        .map(|(phi, ll)| format!("phi={phi:.6} ll={ll:.4}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Brent's method (golden section with parabolic steps) on `[a, b]` starting
/// from `x0` with known value `f0`. `Err(iterations)` if the iteration cap is
/// hit; the inner result carries objective-evaluation errors.
fn brent_minimize<F>(
    f: &mut F,
    a: f64,
    b: f64,
    x0: f64,
    f0: f64,
    tol: f64,
) -> std::result::Result<Result<f64>, usize>
where
    F: FnMut(f64) -> Result<f64>,
{
    const CGOLD: f64 = 0.381_966_011_250_105;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..MAX_ITER {
        let xm = 0.5 * (a + b);
        let tol1 = tol * 0.5 + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok(Ok(x));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = match f(u) {
            Ok(v) => v,
            Err(err) => return Ok(Err(err)),
        };
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(MAX_ITER)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_parabola_minimum() {
        let mut f = |x: f64| Ok((x - 0.3).powi(2));
        let x = brent_minimize(&mut f, -1.0, 1.0, 0.0, 0.09, 1e-8)
            .unwrap()
            .unwrap();
        assert!((x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn nonstationary_phi_rejected() {
        let x = DMatrix::from_element(10, 1, 1.0);
        let y = DVector::from_element(10, 1.0);
        assert!(matches!(
            ar1_profile_loglik(&x, &y, 1.0),
            Err(Error::Stationarity(_))
        ));
        assert!(ar1_profile_loglik(&x, &y, -1.2).is_err());
    }

    #[test]
    fn whitening_first_row() {
        let v = DVector::from_vec(vec![2.0, 3.0, 5.0]);
        let w = whiten_vector(&v, 0.6);
        assert!((w[0] - 2.0 * 0.8).abs() < 1e-15);
        assert!((w[1] - (3.0 - 1.2)).abs() < 1e-15);
        assert!((w[2] - (5.0 - 1.8)).abs() < 1e-15);
    }
}
