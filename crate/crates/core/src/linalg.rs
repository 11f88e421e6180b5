//! Small dense helpers shared by the estimators.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition number ceiling before ridge regularization kicks in.
pub const MAX_CONDITION: f64 = 1e12;
/// Starting ridge multiplier (relative to the mean eigenvalue).
pub const RIDGE_START: f64 = 1e-8;

/// Least squares `X B = Y` for several right-hand sides via Householder QR.
pub fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = x.shape();
    if rows < cols {
        return Err(Error::InsufficientData(format!(
            "{rows} observations for {cols} regressors"
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if diag_max == 0.0
        || r
            .diagonal()
            .iter()
            .any(|v| v.abs() <= diag_max * 1e-12 * rows as f64)
    {
        return Err(Error::Singular("regressor matrix is rank deficient".to_string()));
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Singular("triangular solve failed".to_string()))
}

/// Symmetric positive-definite factor with the ridge that was needed to get it.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    pub chol: Cholesky<f64, Dyn>,
    /// Ridge added to the diagonal, zero when none was needed.
    pub ridge: f64,
}

impl SpdFactor {
    pub fn regularized(&self) -> bool {
        self.ridge > 0.0
    }

    /// `L^{-1} v` where `A = L L'`.
    pub fn whiten_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.l_dirty().solve_lower_triangular(v).expect("nonsingular factor")
    }

    pub fn whiten(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.l_dirty().solve_lower_triangular(m).expect("nonsingular factor")
    }

    /// `v' A^{-1} v`.
    pub fn quad_form(&self, v: &DVector<f64>) -> f64 {
        self.whiten_vec(v).norm_squared()
    }
}

/// Factors a symmetric PSD matrix, adding `delta * trace/n * I` with `delta`
/// escalating by decades from [`RIDGE_START`] until the condition number is
/// below [`MAX_CONDITION`].
pub fn spd_factor(a: &DMatrix<f64>, what: &str) -> Result<SpdFactor> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidArgument(format!("{what} must be square and nonempty")));
    }
    let eig = SymmetricEigen::new(a.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > 0.0) {
        return Err(Error::Singular(format!("{what} has no positive eigenvalue")));
    }
    let well_conditioned = |shift: f64| lo + shift > 0.0 && (hi + shift) / (lo + shift) < MAX_CONDITION;

    let mut ridge = 0.0;
    if !well_conditioned(0.0) {
        let scale = a.trace() / n as f64;
        let mut delta = RIDGE_START;
        loop {
            ridge = delta * scale;
            if well_conditioned(ridge) {
                break;
            }
            delta *= 10.0;
            if delta > 1.0 {
                return Err(Error::Singular(format!("{what} cannot be regularized")));
            }
        }
    }
    let mut shifted = a.clone();
    if ridge > 0.0 {
        for i in 0..n {
            shifted[(i, i)] += ridge;
        }
    }
    let chol = Cholesky::new(shifted)
        .ok_or_else(|| Error::Singular(format!("{what} Cholesky factorization failed")))?;
    Ok(SpdFactor { chol, ridge })
}

/// Factors without regularization; fails if the matrix is not positive definite.
pub fn strict_cholesky(a: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(a.clone()).ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))
}

/// Symmetric square root factor `S` with `S S' = a` for a PSD matrix; zero
/// eigenvalues are allowed.
pub fn psd_sqrt(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument(format!("{what} must be square")));
    }
    let asym = (a - a.transpose()).abs().max();
    let scale = a.abs().max().max(f64::MIN_POSITIVE);
    if asym > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite(format!("{what} is not symmetric")));
    }
    if let Some(chol) = Cholesky::new(a.clone()) {
        return Ok(chol.unpack());
    }
    let eig = SymmetricEigen::new(a.clone());
    if eig.eigenvalues.iter().any(|&v| v < -1e-12 * scale) {
        return Err(Error::NotPositiveDefinite(format!(
            "{what} has a negative eigenvalue"
        )));
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_exact() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DMatrix::from_column_slice(4, 1, &[1.0, 3.0, 5.0, 7.0]);
        let b = least_squares(&x, &y).unwrap();
        assert!((b[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((b[(1, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DMatrix::from_element(3, 1, 1.0);
        assert!(matches!(least_squares(&x, &y), Err(Error::Singular(_))));
    }

    #[test]
    fn singular_matrix_gets_ridge() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = spd_factor(&a, "test").unwrap();
        assert!(f.regularized());
        let good = DMatrix::<f64>::identity(3, 3);
        assert!(!spd_factor(&good, "test").unwrap().regularized());
    }

    #[test]
    fn psd_sqrt_accepts_zero() {
        let z = DMatrix::<f64>::zeros(3, 3);
        let s = psd_sqrt(&z, "zero").unwrap();
        assert_eq!(&s * s.transpose(), z);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(psd_sqrt(&bad, "bad").is_err());
    }
}
