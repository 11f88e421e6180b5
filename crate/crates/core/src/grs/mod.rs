//! Generalized GRS test of `H0: alpha = 0` across all assets.
//!
//! ```text
//! GRS = T (T - n - m) / (n (T - m - 1)) * alpha' Sigma^-1 alpha / (1 + Fbar' Omega^-1 Fbar)
//! ```
//!
//! which is `F(n, T - n - m)` under the null. Quadratic forms go through a
//! Cholesky factor of `Sigma`, never an explicit inverse.

pub mod fdist;

use serde::Serialize;

pub use fdist::{f_cdf, f_quantile, f_upper_tail};

use crate::error::{Error, Result};
use crate::fmb::FirstPassFit;
use crate::linalg::{strict_cholesky, SpdFactor};

/// Windows with fewer denominator degrees of freedom than this are flagged.
pub const LOW_DF_THRESHOLD: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrsResult {
    pub statistic: f64,
    pub df1: usize,
    pub df2: usize,
    pub p_value: f64,
    pub crit_5pct: f64,
    pub crit_10pct: f64,
    /// `df2` below [`LOW_DF_THRESHOLD`].
    pub low_df: bool,
    /// Residual covariance needed a ridge before factorization.
    pub regularized: bool,
}

impl GrsResult {
    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Upper 5% and 10% critical values of `F(df1, df2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValues {
    pub crit_5pct: f64,
    pub crit_10pct: f64,
}

impl CriticalValues {
    pub fn for_df(df1: usize, df2: usize) -> Result<Self> {
        Ok(Self {
            crit_5pct: f_quantile(0.95, df1 as f64, df2 as f64)?,
            crit_10pct: f_quantile(0.90, df1 as f64, df2 as f64)?,
        })
    }
}

/// Degrees of freedom `(n, T - n - m)` for a fit, or an error if `T <= n + m`.
pub fn degrees_of_freedom(fit: &FirstPassFit) -> Result<(usize, usize)> {
    let (t, n, m) = (fit.n_obs(), fit.n_assets(), fit.n_factors());
    if t <= n + m {
        return Err(Error::DegreesOfFreedom(format!(
            "T={t} leaves no denominator degrees of freedom for n={n}, m={m}"
        )));
    }
    Ok((n, t - n - m))
}

pub fn grs_statistic(fit: &FirstPassFit) -> Result<GrsResult> {
    let (df1, df2) = degrees_of_freedom(fit)?;
    let weight = fit.sigma_factor()?;
    grs_statistic_with(fit, &weight, CriticalValues::for_df(df1, df2)?)
}

/// GRS with a precomputed `Sigma` factor and critical values, for sweeps
/// where the degrees of freedom do not change.
pub fn grs_statistic_with(
    fit: &FirstPassFit,
    weight: &SpdFactor,
    crit: CriticalValues,
) -> Result<GrsResult> {
    let (df1, df2) = degrees_of_freedom(fit)?;
    let (t, n, m) = (fit.n_obs() as f64, fit.n_assets() as f64, fit.n_factors() as f64);

    let omega = strict_cholesky(&fit.factor_cov, "factor covariance")?;
    let sharpe_sq = fit.factor_mean.dot(&omega.solve(&fit.factor_mean));
    let alpha_quad = if fit.alpha.iter().all(|&a| a == 0.0) {
        0.0
    } else {
        weight.quad_form(&fit.alpha)
    };
    let scale = t * (t - n - m) / (n * (t - m - 1.0));
    let statistic = scale * alpha_quad / (1.0 + sharpe_sq);
    let p_value = f_upper_tail(statistic, df1 as f64, df2 as f64)?;

    Ok(GrsResult {
        statistic,
        df1,
        df2,
        p_value,
        crit_5pct: crit.crit_5pct,
        crit_10pct: crit.crit_10pct,
        low_df: df2 < LOW_DF_THRESHOLD,
        regularized: weight.regularized(),
    })
}
