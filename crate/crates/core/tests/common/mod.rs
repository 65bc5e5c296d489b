#![allow(dead_code)]

use chrono::NaiveDate;
use load_impact::features::{build_design_matrix, DesignMatrix, ModelSpec};
use load_impact::ingest::{DailySeries, HolidayCalendar};
use load_impact::synthetic::{generate_series, SyntheticSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn date(s: &str) -> NaiveDate {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
}

pub fn holidays(spec: &SyntheticSpec) -> HolidayCalendar {
    use chrono::Datelike;
    HolidayCalendar::italian(spec.start.year(), spec.end.year())
}

pub fn simulate(spec: &SyntheticSpec) -> (DailySeries, HolidayCalendar) {
    let h = holidays(spec);
    let (s, _) = generate_series(spec, &h).unwrap();
    (s, h)
}

pub fn design(spec: &SyntheticSpec, model: &ModelSpec) -> DesignMatrix {
    let (s, h) = simulate(spec);
    build_design_matrix(&s, &h, model).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Intercept plus `k` standard-normal regressors.
pub fn random_design(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    let z = normals(rng, n * k);
    DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { z[i * k + j - 1] })
}

/// Stationary AR(1) path with innovation sd `sigma`.
pub fn ar1_errors(rng: &mut ChaCha8Rng, n: usize, phi: f64, sigma: f64) -> DVector<f64> {
    let z = normals(rng, n);
    let mut u = DVector::zeros(n);
    u[0] = sigma / (1.0 - phi * phi).sqrt() * z[0];
    for t in 1..n {
        u[t] = phi * u[t - 1] + sigma * z[t];
    }
    u
}

/// OLS through the normal equations and a Cholesky factorisation.
pub fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let xtx = x.transpose() * x;
    let chol = xtx.clone().cholesky().expect("positive definite");
    let beta = chol.solve(&(x.transpose() * y));
    (beta, chol.inverse())
}

/// Gaussian log-density of `y ~ N(mean, cov)` evaluated densely.
pub fn dense_gaussian_loglik(y: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = y.len() as f64;
    let chol = cov.clone().cholesky().expect("positive definite");
    let r = y - mean;
    let l = chol.l();
    let logdet = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let quad = r.dot(&chol.solve(&r));
    -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

/// Covariance of a stationary AR(1) process: `σ² φ^|i-j| / (1 - φ²)`.
pub fn ar1_covariance(n: usize, phi: f64, sigma2: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        sigma2 * phi.powi((i as i32 - j as i32).abs()) / (1.0 - phi * phi)
    })
}

pub fn lag1_autocorrelation(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let num: f64 = v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let den: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
    num / den
}

/// Design for `variant` on the synthetic series from `spec`, and its fit.
pub fn fitted(
    spec: &SyntheticSpec,
    variant: load_impact::features::ModelVariant,
) -> (load_impact::estimator::FittedModel, DesignMatrix) {
    let d = design(spec, &variant.apply(&ModelSpec::default()));
    let m = load_impact::estimator::fit(&d).unwrap();
    (m, d)
}

/// Short synthetic span used where the full sample is not needed.
pub fn short_spec() -> SyntheticSpec {
    SyntheticSpec {
        start: date("2018-01-01"),
        ..SyntheticSpec::default()
    }
}
