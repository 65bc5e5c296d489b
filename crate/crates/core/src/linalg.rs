//! Dense kernels shared by the estimators: least squares through Householder
//! QR, a norm-pivoted QR for rank detection, and symmetric factorizations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance on |R_ii| used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Result of a column-pivoted QR used only for rank detection.
#[derive(Debug, Clone)]
pub struct PivotedRank {
    pub rank: usize,
    /// Original column index at each pivoted position.
    pub permutation: Vec<usize>,
    /// |R_ii| in pivot order.
    pub diag: Vec<f64>,
}

impl PivotedRank {
    /// Columns pivoted past the numerical rank.
    pub fn dependent_columns(&self) -> &[usize] {
        &self.permutation[self.rank..]
    }
}

/// Householder QR with Businger-Golub column pivoting (largest remaining
/// column norm first). Rank is the number of |R_ii| above `rel_tol * |R_00|`.
pub fn pivoted_rank(x: &DMatrix<f64>, rel_tol: f64) -> PivotedRank {
    let (n, p) = x.shape();
    let mut a = x.clone();
    let mut perm: Vec<usize> = (0..p).collect();
    let steps = n.min(p);
    let mut diag = Vec::with_capacity(steps);

    for k in 0..steps {
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..p {
            let norm = a.view((k, j), (n - k, 1)).norm_squared();
            if norm > best_norm {
                best_norm = norm;
                best = j;
            }
        }
        a.swap_columns(k, best);
        perm.swap(k, best);

        let mut v: DVector<f64> = a.view((k, k), (n - k, 1)).column(0).into_owned();
        let alpha = v.norm();
        diag.push(alpha);
        if alpha == 0.0 {
            continue;
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..p {
            let mut col = a.column_mut(j);
            let mut seg = col.rows_mut(k, n - k);
            let scale = 2.0 * v.dot(&seg) / vnorm2;
            seg.axpy(-scale, &v, 1.0);
        }
    }

    let lead = diag.first().copied().unwrap_or(0.0);
    let rank = if lead == 0.0 {
        0
    } else {
        diag.iter().take_while(|d| **d > rel_tol * lead).count()
    };
    PivotedRank {
        rank,
        permutation: perm,
        diag,
    }
}

/// Least-squares solution through Householder QR.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta: DVector<f64>,
    pub residuals: DVector<f64>,
    pub ssr: f64,
    /// (XᵀX)⁻¹ assembled as R⁻¹R⁻ᵀ.
    pub xtx_inv: DMatrix<f64>,
}

pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LeastSquares> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Alignment(format!(
            "response has {} rows, regressors {n}",
            y.len()
        )));
    }
    if n <= p {
        return Err(Error::InsufficientData { n, p });
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let lead = r.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    if let Some(i) = r.diagonal().iter().position(|d| d.abs() <= RANK_TOL * lead) {
        return Err(Error::Singular(format!(
            "regressor matrix is rank deficient (R[{i},{i}] ≈ 0)"
        )));
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let qty_head = qty.rows(0, p).into_owned();
    let beta = r
        .solve_upper_triangular(&qty_head)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let residuals = y - x * &beta;
    let ssr = residuals.norm_squared();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Singular("triangular inverse failed".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(LeastSquares {
        beta,
        residuals,
        ssr,
        xtx_inv: symmetrize(xtx_inv),
    })
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Clips eigenvalues below `-tol` (and any tiny negative rounding) to zero.
/// Returns the repaired matrix and whether a repair beyond rounding happened.
pub fn psd_repair(m: DMatrix<f64>, tol: f64) -> (DMatrix<f64>, bool) {
    let m = symmetrize(m);
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().all(|l| *l >= -tol) {
        return (m, false);
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let repaired = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    (symmetrize(repaired), true)
}

/// Symmetric square-root factor `L` with `L Lᵀ = V` for a PSD matrix.
///
/// Eigenvalues within `-1e-10 * max|λ|` of zero are treated as zero; anything
/// more negative is an error.
pub fn psd_factor(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if v.nrows() != v.ncols() {
        return Err(Error::Covariance("covariance matrix is not square".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Covariance("covariance has non-finite entries".into()));
    }
    let eig = SymmetricEigen::new(symmetrize(v.clone()));
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let floor = -1e-10 * scale.max(f64::MIN_POSITIVE);
    if let Some(l) = eig.eigenvalues.iter().find(|l| **l < floor) {
        return Err(Error::Covariance(format!(
            "covariance is not positive semi-definite (eigenvalue {l:e})"
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivoted_rank_flags_dependent_column() {
        let x = DMatrix::from_fn(20, 4, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            2 => ((i * 7) % 5) as f64,
            _ => 2.0 + 3.0 * i as f64,
        });
        let pr = pivoted_rank(&x, RANK_TOL);
        assert_eq!(pr.rank, 3);
        assert_eq!(pr.dependent_columns().len(), 1);
        let full = pivoted_rank(&x.columns(0, 3).into_owned(), RANK_TOL);
        assert_eq!(full.rank, 3);
    }

    #[test]
    fn least_squares_rejects_singular() {
        let x = DMatrix::from_fn(10, 2, |i, _| i as f64);
        let y = DVector::from_fn(10, |i, _| i as f64);
        assert!(matches!(least_squares(&x, &y), Err(Error::Singular(_))));
    }

    #[test]
    fn psd_factor_reconstructs() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
        let l = psd_factor(&a).unwrap();
        assert!((&l * l.transpose() - &a).abs().max() < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(psd_factor(&bad).is_err());
    }

    #[test]
    fn repair_clips_negative_eigenvalues() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let (fixed, repaired) = psd_repair(bad, 1e-12);
        assert!(repaired);
        let eig = SymmetricEigen::new(fixed);
        assert!(eig.eigenvalues.iter().all(|l| *l >= -1e-12));
    }
}
