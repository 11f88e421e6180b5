//! Augmented Dickey-Fuller unit-root test with BIC lag selection.
//!
//! The test regression is
//!
//! ```text
//! dy_t = [c + d t] + gamma y_{t-1} + sum_{k=1..p} phi_k dy_{t-k} + e_t
//! ```
//!
//! and the statistic is the t-ratio on `gamma`. Critical values come from
//! MacKinnon's (2010) response surfaces for a single series.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deterministic {
    None,
    #[default]
    Constant,
    ConstantTrend,
}

impl Deterministic {
    fn n_terms(self) -> usize {
        match self {
            Deterministic::None => 0,
            Deterministic::Constant => 1,
            Deterministic::ConstantTrend => 2,
        }
    }

    /// Response-surface coefficients `(b0, b1, b2, b3)` at 1%, 5%, 10%.
    fn surface(self) -> [[f64; 4]; 3] {
        match self {
            Deterministic::None => [
                [-2.56574, -2.2358, -3.627, 0.0],
                [-1.94100, -0.2686, -3.365, 31.223],
                [-1.61682, 0.2656, -2.714, 25.364],
            ],
            Deterministic::Constant => [
                [-3.43035, -6.5393, -16.786, -79.433],
                [-2.86154, -2.8903, -4.234, -40.040],
                [-2.56677, -1.5384, -2.809, 0.0],
            ],
            Deterministic::ConstantTrend => [
                [-3.95877, -9.0531, -28.428, -134.155],
                [-3.41049, -4.3904, -9.036, -45.374],
                [-3.12705, -2.5856, -3.925, -22.380],
            ],
        }
    }
}

/// Tau critical values at 1%, 5% and 10% for a regression with `nobs`
/// observations.
pub fn critical_values(deterministic: Deterministic, nobs: usize) -> [f64; 3] {
    let t = nobs as f64;
    deterministic
        .surface()
        .map(|[b0, b1, b2, b3]| b0 + b1 / t + b2 / (t * t) + b3 / (t * t * t))
}

/// `floor(12 (T/100)^{1/4})`.
pub fn schwert_max_lag(t: usize) -> usize {
    (12.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PValueBand {
    #[serde(rename = "<0.01")]
    Below1,
    #[serde(rename = "<0.05")]
    Below5,
    #[serde(rename = "<0.10")]
    Below10,
    #[serde(rename = ">=0.10")]
    NotSignificant,
}

impl PValueBand {
    pub fn as_str(self) -> &'static str {
        match self {
            PValueBand::Below1 => "<0.01",
            PValueBand::Below5 => "<0.05",
            PValueBand::Below10 => "<0.10",
            PValueBand::NotSignificant => ">=0.10",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub chosen_lag: usize,
    pub deterministic: Deterministic,
    pub nobs: usize,
    /// Critical values at 1%, 5%, 10%.
    pub critical: [f64; 3],
    pub p_value_band: PValueBand,
    pub reject_at_1pct: bool,
}

impl AdfResult {
    /// Unit-root rejection at 1%, 5%, 10%.
    pub fn decisions(&self) -> [bool; 3] {
        self.critical.map(|c| self.statistic < c)
    }
}

fn check_series(series: &[f64], max_lag: usize) -> Result<()> {
    if series.len() <= max_lag + 10 {
        return Err(Error::InsufficientData(format!(
            "ADF needs more than max_lag + 10 = {} observations, got {}",
            max_lag + 10,
            series.len()
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("series has non-finite values".into()));
    }
    let first = series[0];
    if series.iter().all(|&v| v == first) {
        return Err(Error::Singular("constant series has a singular ADF design".into()));
    }
    Ok(())
}

/// ADF design over rows `i in start..T-1` of the differenced series, with
/// columns ordered deterministic terms, `y_{t-1}`, then `lags` lagged
/// differences so that every smaller lag order is a column prefix.
fn design(series: &[f64], start: usize, lags: usize, det: Deterministic) -> (DMatrix<f64>, DVector<f64>) {
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let rows = dy.len() - start;
    let d = det.n_terms();
    let mut x = DMatrix::zeros(rows, d + 1 + lags);
    let mut y = DVector::zeros(rows);
    for (r, i) in (start..dy.len()).enumerate() {
        y[r] = dy[i];
        if d >= 1 {
            x[(r, 0)] = 1.0;
        }
        if d == 2 {
            x[(r, 1)] = (i + 1) as f64;
        }
        x[(r, d)] = series[i];
        for k in 1..=lags {
            x[(r, d + k)] = dy[i - k];
        }
    }
    (x, y)
}

/// BIC-minimizing lag in `0..=max_lag`; every candidate is fitted on the
/// same sample, trimmed for the largest lag.
pub fn select_lag_bic(series: &[f64], max_lag: usize, deterministic: Deterministic) -> Result<usize> {
    check_series(series, max_lag)?;
    if max_lag == 0 {
        return Ok(0);
    }
    let (x, y) = design(series, max_lag, max_lag, deterministic);
    let nobs = x.nrows() as f64;
    let gram = x.tr_mul(&x);
    let xty = x.tr_mul(&y);
    let yty = y.norm_squared();
    // Jacobi scaling keeps the Gram solves well conditioned
    let scale: Vec<f64> = gram.diagonal().iter().map(|g| 1.0 / g.sqrt()).collect();

    let d = deterministic.n_terms();
    let mut best = (f64::INFINITY, 0usize);
    for lag in 0..=max_lag {
        let k = d + 1 + lag;
        let g = DMatrix::from_fn(k, k, |i, j| gram[(i, j)] * scale[i] * scale[j]);
        let v = DVector::from_fn(k, |i, _| xty[i] * scale[i]);
        let Some(chol) = g.cholesky() else {
            continue;
        };
        let b = chol.solve(&v);
        let ssr = (yty - b.dot(&v)).max(f64::MIN_POSITIVE);
        let bic = nobs * (ssr / nobs).ln() + k as f64 * nobs.ln();
        if bic < best.0 {
            best = (bic, lag);
        }
    }
    if !best.0.is_finite() {
        return Err(Error::Singular("no ADF lag order gave a regular design".into()));
    }
    Ok(best.1)
}

/// ADF test at a fixed lag order, fitted on the largest available sample.
pub fn adf_fixed_lag(series: &[f64], lag: usize, deterministic: Deterministic) -> Result<AdfResult> {
    check_series(series, lag)?;
    let (x, y) = design(series, lag, lag, deterministic);
    let (nobs, k) = x.shape();
    let ym = DMatrix::from_column_slice(nobs, 1, y.as_slice());
    let coef = least_squares(&x, &ym)?;
    let resid = &ym - &x * &coef;
    let ssr = resid.norm_squared();
    if !(ssr > 0.0) {
        return Err(Error::Singular("ADF regression fits exactly".into()));
    }
    let s2 = ssr / (nobs - k) as f64;
    let r = x.clone().qr().r();
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::Singular("ADF design".into()))?;
    let g = deterministic.n_terms();
    // [(X'X)^{-1}]_gg = ||row g of R^{-1}||^2
    let var_gamma = s2 * rinv.row(g).norm_squared();
    let statistic = coef[(g, 0)] / var_gamma.sqrt();

    let critical = critical_values(deterministic, nobs);
    let p_value_band = if statistic < critical[0] {
        PValueBand::Below1
    } else if statistic < critical[1] {
        PValueBand::Below5
    } else if statistic < critical[2] {
        PValueBand::Below10
    } else {
        PValueBand::NotSignificant
    };
    Ok(AdfResult {
        statistic,
        chosen_lag: lag,
        deterministic,
        nobs,
        critical,
        p_value_band,
        reject_at_1pct: statistic < critical[0],
    })
}

pub fn adf_test(series: &[f64], max_lag: usize, deterministic: Deterministic) -> Result<AdfResult> {
    let lag = select_lag_bic(series, max_lag, deterministic)?;
    adf_fixed_lag(series, lag, deterministic)
}
