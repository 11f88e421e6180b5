//! Two-pass estimation.
//!
//! The first pass regresses each asset's excess returns on a constant and the
//! factors. Every equation shares the same regressors, so per-asset OLS gives
//! the same coefficients as the joint GLS/SUR fit for any residual weighting.
//! The second pass regresses mean excess returns on the estimated loadings,
//! weighting by the inverse residual covariance and without an intercept.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, spd_factor, strict_cholesky, SpdFactor};
use crate::panel::{column_means, AlignedPanel};

/// Output of the time-series pass over one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassFit {
    /// Intercepts, one per asset.
    pub alpha: DVector<f64>,
    /// Loadings, `n x m`.
    pub beta: DMatrix<f64>,
    /// Residuals, `T x n`.
    pub residuals: DMatrix<f64>,
    /// Residual covariance with divisor `T - m - 1`.
    pub sigma_hat: DMatrix<f64>,
    pub factor_mean: DVector<f64>,
    /// Factor covariance with divisor `T`.
    pub factor_cov: DMatrix<f64>,
}

impl FirstPassFit {
    pub fn n_obs(&self) -> usize {
        self.residuals.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factor_mean.len()
    }

    /// Cholesky factor of `sigma_hat`, ridge-regularized if ill-conditioned.
    pub fn sigma_factor(&self) -> Result<SpdFactor> {
        spd_factor(&self.sigma_hat, "residual covariance")
    }
}

pub fn first_pass(panel: &AlignedPanel) -> Result<FirstPassFit> {
    first_pass_matrices(panel.excess_returns(), panel.factor_matrix())
}

/// First pass on raw `T x n` excess returns and `T x m` factors.
pub fn first_pass_matrices(returns: &DMatrix<f64>, factors: &DMatrix<f64>) -> Result<FirstPassFit> {
    let (t, n) = returns.shape();
    let m = factors.ncols();
    if factors.nrows() != t {
        return Err(Error::LengthMismatch {
            expected: t,
            actual: factors.nrows(),
        });
    }
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("need at least one asset and one factor".into()));
    }
    if t <= n + m + 1 {
        return Err(Error::InsufficientData(format!(
            "T={t} must exceed n + m + 1 = {}",
            n + m + 1
        )));
    }

    let mut x = DMatrix::from_element(t, m + 1, 1.0);
    x.columns_mut(1, m).copy_from(factors);
    let coef = least_squares(&x, returns).map_err(|e| match e {
        Error::Singular(_) => Error::Singular("factor matrix (with constant) is rank deficient".into()),
        other => other,
    })?;

    let alpha = coef.row(0).transpose();
    let beta = coef.rows(1, m).transpose();
    let residuals = returns - &x * &coef;
    let mut sigma_hat = residuals.tr_mul(&residuals) / (t - m - 1) as f64;
    symmetrize(&mut sigma_hat);

    let factor_mean = DVector::from_vec(column_means(factors));
    let mut centered = factors.clone();
    for mut row in centered.row_iter_mut() {
        row -= factor_mean.transpose();
    }
    let mut factor_cov = centered.tr_mul(&centered) / t as f64;
    symmetrize(&mut factor_cov);

    Ok(FirstPassFit {
        alpha,
        beta,
        residuals,
        sigma_hat,
        factor_mean,
        factor_cov,
    })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SecondPassOptions {
    /// Apply the errors-in-variables correction for estimated loadings.
    pub shanken: bool,
    /// Diagnostic variant with a cross-sectional intercept.
    pub intercept: bool,
}

/// Cross-sectional risk-premium estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskPremiumEstimate {
    pub lambda: Vec<f64>,
    pub robust_se: Vec<f64>,
    pub cov_lambda: Vec<Vec<f64>>,
    /// Sample mean of each factor over the same window.
    pub expected_premium: Vec<f64>,
    /// Intercept and its standard error, only for the diagnostic variant.
    pub intercept: Option<(f64, f64)>,
    /// Whether the residual covariance needed a ridge.
    pub regularized: bool,
}

impl RiskPremiumEstimate {
    /// `lambda +/- z * se` per factor.
    pub fn confidence_band(&self, z: f64) -> Vec<(f64, f64)> {
        self.lambda
            .iter()
            .zip(&self.robust_se)
            .map(|(l, s)| (l - z * s, l + z * s))
            .collect()
    }
}

pub fn second_pass(fit: &FirstPassFit, mean_excess: &[f64]) -> Result<RiskPremiumEstimate> {
    let weight = fit.sigma_factor()?;
    second_pass_with(fit, &weight, mean_excess, SecondPassOptions::default())
}

/// GLS cross-section `mean_excess = B lambda`, weighted by `Sigma^{-1}`.
///
/// Both sides are premultiplied by `L^{-1}` (`Sigma = L L'`) and the
/// whitened system is solved by least squares. Standard errors are HC1
/// heteroskedasticity-robust on the whitened residuals.
pub fn second_pass_with(
    fit: &FirstPassFit,
    weight: &SpdFactor,
    mean_excess: &[f64],
    opts: SecondPassOptions,
) -> Result<RiskPremiumEstimate> {
    let n = fit.n_assets();
    let m = fit.n_factors();
    if mean_excess.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: mean_excess.len(),
        });
    }
    let k = m + usize::from(opts.intercept);
    if n < k {
        return Err(Error::InsufficientData(format!(
            "{n} assets cannot identify {k} cross-sectional coefficients"
        )));
    }
    let mut design = DMatrix::zeros(n, k);
    let offset = usize::from(opts.intercept);
    if opts.intercept {
        design.column_mut(0).fill(1.0);
    }
    design.columns_mut(offset, m).copy_from(&fit.beta);

    let xw = weight.whiten(&design);
    let yw = weight.whiten_vec(&DVector::from_column_slice(mean_excess));
    let ym = DMatrix::from_column_slice(n, 1, yw.as_slice());
    let coef = least_squares(&xw, &ym).map_err(|e| match e {
        Error::Singular(_) => Error::Singular("B' Sigma^-1 B is singular".into()),
        other => other,
    })?;
    let coef = coef.column(0).into_owned();
    let resid = &yw - &xw * &coef;

    let xtx = xw.tr_mul(&xw);
    let bread = strict_cholesky(&xtx, "B' Sigma^-1 B")?.inverse();
    let mut meat = DMatrix::zeros(k, k);
    for (i, row) in xw.row_iter().enumerate() {
        let u2 = resid[i] * resid[i];
        meat += row.transpose() * row * u2;
    }
    let dof_scale = if n > k { n as f64 / (n - k) as f64 } else { 1.0 };
    let mut cov = &bread * meat * &bread * dof_scale;

    let lambda: DVector<f64> = coef.rows(offset, m).into_owned();
    if opts.shanken {
        let omega = strict_cholesky(&fit.factor_cov, "factor covariance")?;
        let c = 1.0 + lambda.dot(&omega.solve(&lambda));
        cov *= c;
        let t = fit.n_obs() as f64;
        let mut block = cov.view_mut((offset, offset), (m, m));
        block += &fit.factor_cov / t;
    }
    symmetrize(&mut cov);

    let se = |i: usize| cov[(i, i)].max(0.0).sqrt();
    let lambda_cov = cov.view((offset, offset), (m, m));
    Ok(RiskPremiumEstimate {
        lambda: lambda.iter().copied().collect(),
        robust_se: (offset..k).map(se).collect(),
        cov_lambda: lambda_cov
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect(),
        expected_premium: fit.factor_mean.iter().copied().collect(),
        intercept: opts.intercept.then(|| (coef[0], se(0))),
        regularized: weight.regularized(),
    })
}

/// Per-factor sample mean over the panel.
pub fn expected_premiums(panel: &AlignedPanel) -> Vec<f64> {
    column_means(panel.factor_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal) * scale)
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let a = random_matrix(rng, n, n, 1.0);
        &a * a.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn noiseless_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (t, n, m) = (200, 6, 3);
        let f = random_matrix(&mut rng, t, m, 0.01);
        let b = random_matrix(&mut rng, n, m, 1.0);
        let a = DVector::from_fn(n, |i, _| 1e-4 * (i as f64 + 1.0));
        let mut r = &f * b.transpose();
        for mut row in r.row_iter_mut() {
            row += a.transpose();
        }
        let fit = first_pass_matrices(&r, &f).unwrap();
        for i in 0..n {
            assert!(((fit.alpha[i] - a[i]) / a[i]).abs() < 1e-10);
            for j in 0..m {
                assert!(((fit.beta[(i, j)] - b[(i, j)]) / b[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_asset_on_itself() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_matrix(&mut rng, 50, 1, 0.02);
        let fit = first_pass_matrices(&f, &f).unwrap();
        assert!((fit.beta[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(fit.alpha[0].abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let f = DMatrix::from_element(10, 2, 1.0);
        let r = DMatrix::from_element(10, 3, 1.0);
        assert!(matches!(first_pass_matrices(&r, &f), Err(Error::Singular(_))));
        let f = DMatrix::from_fn(5, 2, |i, j| (i * j) as f64);
        let r = DMatrix::from_element(5, 3, 1.0);
        assert!(matches!(first_pass_matrices(&r, &f), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn residual_orthogonality_and_divisors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (t, n, m) = (120, 5, 2);
        let f = random_matrix(&mut rng, t, m, 0.01);
        let r = random_matrix(&mut rng, t, n, 0.02);
        let fit = first_pass_matrices(&r, &f).unwrap();
        let ortho = f.tr_mul(&fit.residuals);
        assert!(ortho.abs().max() < 1e-14);
        for c in fit.residuals.column_iter() {
            assert!(c.sum().abs() < 1e-14);
        }
        let direct = fit.residuals.tr_mul(&fit.residuals) / (t - m - 1) as f64;
        assert!((direct - &fit.sigma_hat).abs().max() < 1e-16);
        let mean0: f64 = f.column(0).sum() / t as f64;
        let var0: f64 = f.column(0).iter().map(|v| (v - mean0).powi(2)).sum::<f64>() / t as f64;
        assert!((fit.factor_cov[(0, 0)] - var0).abs() < 1e-18);
    }

    /// Stacked SUR/GLS solve with weight `W (x) I_T` built explicitly.
    fn stacked_gls(r: &DMatrix<f64>, f: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
        let (t, n) = r.shape();
        let k = f.ncols() + 1;
        let mut x = DMatrix::from_element(t, k, 1.0);
        x.columns_mut(1, k - 1).copy_from(f);
        let big_x = DMatrix::identity(n, n).kronecker(&x);
        let winv = w.clone().try_inverse().unwrap();
        let omega_inv = winv.kronecker(&DMatrix::<f64>::identity(t, t));
        let y = DVector::from_column_slice(r.as_slice());
        let lhs = big_x.transpose() * &omega_inv * &big_x;
        let rhs = big_x.transpose() * &omega_inv * y;
        let b = lhs.try_inverse().unwrap() * rhs;
        DMatrix::from_column_slice(k, n, b.as_slice())
    }

    #[test]
    fn identical_regressor_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let (t, n, m) = (40, 4, 2);
            let f = random_matrix(&mut rng, t, m, 1.0);
            let r = random_matrix(&mut rng, t, n, 1.0);
            let w = random_spd(&mut rng, n);
            let fit = first_pass_matrices(&r, &f).unwrap();
            let gls = stacked_gls(&r, &f, &w);
            for i in 0..n {
                assert!((gls[(0, i)] - fit.alpha[i]).abs() < 1e-8);
                for j in 0..m {
                    assert!((gls[(j + 1, i)] - fit.beta[(i, j)]).abs() < 1e-8);
                }
            }
        }
    }

    fn fit_with(beta: DMatrix<f64>, sigma: DMatrix<f64>) -> FirstPassFit {
        let (n, m) = beta.shape();
        FirstPassFit {
            alpha: DVector::zeros(n),
            beta,
            residuals: DMatrix::zeros(100, n),
            sigma_hat: sigma,
            factor_mean: DVector::from_element(m, 0.001),
            factor_cov: DMatrix::identity(m, m) * 1e-4,
        }
    }

    #[test]
    fn identity_system() {
        let fit = fit_with(DMatrix::identity(3, 3), DMatrix::identity(3, 3));
        let mean = [0.01, -0.02, 0.003];
        let est = second_pass(&fit, &mean).unwrap();
        for (l, m) in est.lambda.iter().zip(mean) {
            assert!((l - m).abs() < 1e-15);
        }
    }

    #[test]
    fn scalar_weight_gives_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, m) = (12, 3);
        let b = random_matrix(&mut rng, n, m, 1.0);
        let mean: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 1e-3).collect();
        let y = DVector::from_vec(mean.clone());
        let ols = (b.transpose() * &b).try_inverse().unwrap() * b.transpose() * y;
        for c in [1e-6, 1.0, 250.0] {
            let fit = fit_with(b.clone(), DMatrix::identity(n, n) * c);
            let est = second_pass(&fit, &mean).unwrap();
            for j in 0..m {
                assert!((est.lambda[j] - ols[j]).abs() < 1e-12 * ols[j].abs().max(1e-3));
            }
        }
    }

    #[test]
    fn exact_recovery_any_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (n, m) = (10, 3);
        for _ in 0..10 {
            let b = random_matrix(&mut rng, n, m, 1.0);
            let lam = DVector::from_vec(vec![0.0005, -0.0003, 0.0012]);
            let mean = &b * &lam;
            let fit = fit_with(b, random_spd(&mut rng, n));
            let est = second_pass(&fit, mean.as_slice()).unwrap();
            for j in 0..m {
                assert!(((est.lambda[j] - lam[j]) / lam[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn intercept_and_shanken_variants() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, m) = (15, 2);
        let b = random_matrix(&mut rng, n, m, 1.0);
        let mean: Vec<f64> = (0..n).map(|i| 0.002 + 1e-3 * b[(i, 0)] + 1e-4 * (i as f64).sin()).collect();
        let fit = fit_with(b, random_spd(&mut rng, n));
        let w = fit.sigma_factor().unwrap();
        let plain = second_pass_with(&fit, &w, &mean, SecondPassOptions::default()).unwrap();
        assert!(plain.intercept.is_none());
        let with_c = second_pass_with(
            &fit,
            &w,
            &mean,
            SecondPassOptions { intercept: true, shanken: false },
        )
        .unwrap();
        let (c, se) = with_c.intercept.unwrap();
        assert!((c - 0.002).abs() < 5e-4, "{c}");
        assert!(se > 0.0);
        let sh = second_pass_with(
            &fit,
            &w,
            &mean,
            SecondPassOptions { intercept: false, shanken: true },
        )
        .unwrap();
        for j in 0..m {
            assert_eq!(sh.lambda[j], plain.lambda[j]);
            assert!(sh.robust_se[j] > plain.robust_se[j]);
        }
    }

    #[test]
    fn length_mismatch() {
        let fit = fit_with(DMatrix::identity(3, 2), DMatrix::identity(3, 3));
        assert!(matches!(second_pass(&fit, &[0.0; 2]), Err(Error::LengthMismatch { .. })));
    }
}
