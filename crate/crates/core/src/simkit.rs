//! Synthetic linear factor panels and a Monte Carlo harness around the full
//! estimation pipeline.
//!
//! Factors are drawn with mean `lambda_true`, so the true premia are known,
//! and excess returns follow `r_t = alpha + beta f_t + e_t`.

use std::io::Write;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmb::{first_pass, second_pass_with, SecondPassOptions};
use crate::grs::{grs_statistic_with, CriticalValues};
use crate::linalg::psd_sqrt;
use crate::panel::AlignedPanel;
use crate::parallel::with_threads;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Innovations {
    #[default]
    Gaussian,
    /// Student-t rescaled to unit variance; `df > 2`.
    StudentT { df: f64 },
}

/// Structure seed behind [`DgpSpec::desk_default`].
pub const DESK_STRUCTURE_SEED: u64 = 0x5EED_0A97;

/// Data-generating process for one synthetic panel.
#[derive(Debug, Clone, PartialEq)]
pub struct DgpSpec {
    pub n: usize,
    pub m: usize,
    pub t: usize,
    pub alpha: Vec<f64>,
    /// `n x m`
    pub beta: DMatrix<f64>,
    pub lambda_true: Vec<f64>,
    pub factor_cov: DMatrix<f64>,
    pub resid_cov: DMatrix<f64>,
    pub innovations: Innovations,
    pub seed: u64,
}

impl DgpSpec {
    /// A spec with daily-scale parameters drawn from `structure_seed`:
    /// first-factor loadings near one, others centred at zero, equicorrelated
    /// factors and diagonal residual covariance.
    pub fn random(n: usize, m: usize, t: usize, structure_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(structure_seed);
        let mut normal = move || rng.sample::<f64, _>(StandardNormal);
        let beta = DMatrix::from_fn(n, m, |_, j| {
            if j == 0 {
                1.0 + 0.3 * normal()
            } else {
                0.6 * normal()
            }
        });
        let sd: Vec<f64> = (0..m).map(|j| 0.006 + 0.004 * ((j * 7 % 5) as f64)).collect();
        let factor_cov = DMatrix::from_fn(m, m, |i, j| {
            let rho = if i == j { 1.0 } else { 0.2 };
            rho * sd[i] * sd[j]
        });
        let lambda_true = (0..m)
            .map(|j| 4e-4 * if j % 2 == 0 { 1.0 } else { -0.5 } / (1.0 + j as f64 / 4.0))
            .collect();
        let resid_cov = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                (0.008 + 0.006 * ((i * 3 % 7) as f64 / 6.0)).powi(2)
            } else {
                0.0
            }
        });
        Self {
            n,
            m,
            t,
            alpha: vec![0.0; n],
            beta,
            lambda_true,
            factor_cov,
            resid_cov,
            innovations: Innovations::Gaussian,
            seed: 0,
        }
    }

    /// Desk-scale default: 33 assets, 9 factors, 6300 daily observations.
    pub fn desk_default() -> Self {
        Self::random(33, 9, 6300, DESK_STRUCTURE_SEED)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_t(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.m >= self.n {
            return Err(Error::InvalidArgument(format!(
                "need 0 < m < n, got n={}, m={}",
                self.n, self.m
            )));
        }
        if self.alpha.len() != self.n || self.lambda_true.len() != self.m {
            return Err(Error::InvalidArgument("alpha/lambda length mismatch".into()));
        }
        if self.beta.shape() != (self.n, self.m)
            || self.factor_cov.shape() != (self.m, self.m)
            || self.resid_cov.shape() != (self.n, self.n)
        {
            return Err(Error::InvalidArgument("beta or covariance has the wrong shape".into()));
        }
        if let Innovations::StudentT { df } = self.innovations {
            if !(df > 2.0) {
                return Err(Error::InvalidArgument(format!("Student-t df must exceed 2, got {df}")));
            }
        }
        Ok(())
    }
}

/// Weekday calendar starting at the first weekday on or after `start`.
pub fn business_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn draw_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, innovations: Innovations) -> DMatrix<f64> {
    // row-major fill so the stream order is (t, column)
    let mut data = Vec::with_capacity(rows * cols);
    match innovations {
        Innovations::Gaussian => {
            for _ in 0..rows * cols {
                data.push(rng.sample::<f64, _>(StandardNormal));
            }
        }
        Innovations::StudentT { df } => {
            let dist = StudentT::new(df).expect("validated df");
            let scale = ((df - 2.0) / df).sqrt();
            for _ in 0..rows * cols {
                data.push(rng.sample(dist) * scale);
            }
        }
    }
    DMatrix::from_row_slice(rows, cols, &data)
}

/// Draws one panel. Identical specs (including the seed) give identical panels.
pub fn simulate(spec: &DgpSpec) -> Result<AlignedPanel> {
    spec.validate()?;
    let factor_root = psd_sqrt(&spec.factor_cov, "factor covariance")?;
    let resid_root = psd_sqrt(&spec.resid_cov, "residual covariance")?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let zf = draw_matrix(&mut rng, spec.t, spec.m, spec.innovations);
    let ze = draw_matrix(&mut rng, spec.t, spec.n, spec.innovations);
    let lambda = DVector::from_column_slice(&spec.lambda_true);
    let alpha = DVector::from_column_slice(&spec.alpha);

    let mut factors = zf * factor_root.transpose();
    for mut row in factors.row_iter_mut() {
        row += lambda.transpose();
    }
    let mut returns = &factors * spec.beta.transpose() + ze * resid_root.transpose();
    for mut row in returns.row_iter_mut() {
        row += alpha.transpose();
    }

    let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(), spec.t);
    AlignedPanel::new(
        dates,
        returns,
        (1..=spec.n).map(|i| format!("A{i}")).collect(),
        factors,
        (1..=spec.m).map(|j| format!("F{j}")).collect(),
    )
}

/// Seed for replication `rep`, independent of scheduling (SplitMix64 mix).
pub fn replication_seed(base: u64, rep: usize) -> u64 {
    let mut z = base ^ (rep as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReplication {
    pub rep: usize,
    pub seed: u64,
    pub grs_stat: f64,
    pub p_value: f64,
    pub rejected: bool,
    pub alpha_hat: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    /// Root mean squared loading error over all `n x m` entries.
    pub beta_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub reps: usize,
    pub level: f64,
    pub failures: usize,
    pub failure_messages: Vec<String>,
    pub rejection_rate: f64,
    pub lambda_true: Vec<f64>,
    pub lambda_bias: Vec<f64>,
    /// Monte Carlo standard error of each bias entry.
    pub lambda_bias_se: Vec<f64>,
    pub lambda_rmse: Vec<f64>,
    pub beta_rmse: f64,
    pub rows: Vec<McReplication>,
}

impl McReport {
    /// Across-replication standard deviation of each asset's alpha estimate.
    pub fn alpha_sd(&self) -> Vec<f64> {
        let k = self.rows.len() as f64;
        let n = self.rows.first().map_or(0, |r| r.alpha_hat.len());
        (0..n)
            .map(|i| {
                let mean = self.rows.iter().map(|r| r.alpha_hat[i]).sum::<f64>() / k;
                let var = self.rows.iter().map(|r| (r.alpha_hat[i] - mean).powi(2)).sum::<f64>()
                    / (k - 1.0).max(1.0);
                var.sqrt()
            })
            .collect()
    }

    /// One row per replication.
    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let m = self.lambda_true.len();
        let mut header: Vec<String> = ["rep", "seed", "grs_stat", "p_value", "rejected"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=m).map(|j| format!("lambda_{j}")));
        header.push("beta_rmse".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.rep.to_string(),
                r.seed.to_string(),
                r.grs_stat.to_string(),
                r.p_value.to_string(),
                r.rejected.to_string(),
            ];
            rec.extend(r.lambda_hat.iter().map(|v| v.to_string()));
            rec.push(r.beta_rmse.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Per-factor bias table plus the size/power line.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["factor", "lambda_true", "bias", "bias_se", "rmse"])?;
        for j in 0..self.lambda_true.len() {
            w.write_record([
                format!("F{}", j + 1),
                self.lambda_true[j].to_string(),
                self.lambda_bias[j].to_string(),
                self.lambda_bias_se[j].to_string(),
                self.lambda_rmse[j].to_string(),
            ])?;
        }
        w.write_record([
            "grs_rejection_rate".to_string(),
            self.level.to_string(),
            self.rejection_rate.to_string(),
            String::new(),
            self.beta_rmse.to_string(),
        ])?;
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn one_replication(
    spec: &DgpSpec,
    rep: usize,
    level: f64,
    crit: CriticalValues,
) -> Result<McReplication> {
    let seed = replication_seed(spec.seed, rep);
    let mut s = spec.clone();
    s.seed = seed;
    let panel = simulate(&s)?;
    let fit = first_pass(&panel)?;
    let weight = fit.sigma_factor()?;
    let grs = grs_statistic_with(&fit, &weight, crit)?;
    let prem = second_pass_with(&fit, &weight, &panel.mean_excess(), SecondPassOptions::default())?;
    let beta_rmse = ((&fit.beta - &spec.beta).norm_squared() / (spec.n * spec.m) as f64).sqrt();
    Ok(McReplication {
        rep,
        seed,
        grs_stat: grs.statistic,
        p_value: grs.p_value,
        rejected: grs.p_value < level,
        alpha_hat: fit.alpha.iter().copied().collect(),
        lambda_hat: prem.lambda,
        beta_rmse,
    })
}

/// Runs the full pipeline on `reps` independent draws of `spec`.
///
/// Replication `k` uses seed `replication_seed(spec.seed, k)`, so results do
/// not depend on `threads`.
pub fn mc_experiment(spec: &DgpSpec, reps: usize, level: f64, threads: Option<usize>) -> Result<McReport> {
    spec.validate()?;
    if reps == 0 {
        return Err(Error::InvalidArgument("need at least one replication".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("test level must be in (0,1), got {level}")));
    }
    let (n, m, t) = (spec.n, spec.m, spec.t);
    if t <= n + m + 1 {
        return Err(Error::InsufficientData(format!("T={t} too small for n={n}, m={m}")));
    }
    let crit = CriticalValues::for_df(n, t - n - m)?;
    let outcomes: Vec<Result<McReplication>> = with_threads(threads, || {
        (0..reps)
            .into_par_iter()
            .map(|rep| one_replication(spec, rep, level, crit))
            .collect()
    })?;

    let mut rows = Vec::with_capacity(reps);
    let mut failure_messages = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(e) => failure_messages.push(e.to_string()),
        }
    }
    let ok = rows.len() as f64;
    let rejection_rate = if rows.is_empty() {
        f64::NAN
    } else {
        rows.iter().filter(|r| r.rejected).count() as f64 / ok
    };
    let mut lambda_bias = vec![0.0; m];
    let mut lambda_bias_se = vec![0.0; m];
    let mut lambda_rmse = vec![0.0; m];
    for j in 0..m {
        let errs: Vec<f64> = rows.iter().map(|r| r.lambda_hat[j] - spec.lambda_true[j]).collect();
        let mean = errs.iter().sum::<f64>() / ok;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (ok - 1.0).max(1.0);
        lambda_bias[j] = mean;
        lambda_bias_se[j] = (var / ok).sqrt();
        lambda_rmse[j] = (errs.iter().map(|e| e * e).sum::<f64>() / ok).sqrt();
    }
    let beta_rmse = (rows.iter().map(|r| r.beta_rmse.powi(2)).sum::<f64>() / ok).sqrt();

    Ok(McReport {
        reps,
        level,
        failures: failure_messages.len(),
        failure_messages,
        rejection_rate,
        lambda_true: spec.lambda_true.clone(),
        lambda_bias,
        lambda_bias_se,
        lambda_rmse,
        beta_rmse,
        rows,
    })
}
