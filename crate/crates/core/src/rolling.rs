//! Rolling-window re-estimation.
//!
//! Each window is estimated from its own rows only and stamped with its last
//! (most recent) date. Windows are independent, so they are spread across a
//! worker pool and collected back in plan order.

use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmb::{first_pass_matrices, second_pass_with, RiskPremiumEstimate, SecondPassOptions};
use crate::grs::{grs_statistic_with, CriticalValues, GrsResult, LOW_DF_THRESHOLD};
use crate::panel::{column_means, AlignedPanel, DATE_FORMAT};
use crate::parallel::with_threads;

/// Default window width (about two years of trading days).
pub const DEFAULT_WINDOW: usize = 500;

/// Two-sided 95% normal quantile used for the premium bands.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowPlan {
    pub width: usize,
    pub step: usize,
    /// Half-open row ranges `start..end`.
    pub windows: Vec<(usize, usize)>,
}

impl WindowPlan {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// Row index each window is stamped with (its last row).
    pub fn stamp_rows(&self) -> impl Iterator<Item = usize> + '_ {
        self.windows.iter().map(|&(_, end)| end - 1)
    }
}

/// `floor((T - w) / step) + 1` windows of exactly `w` rows.
pub fn plan_windows(t: usize, width: usize, step: usize) -> Result<WindowPlan> {
    if width == 0 || step == 0 {
        return Err(Error::InvalidArgument("window width and step must be positive".into()));
    }
    if width > t {
        return Err(Error::InsufficientData(format!(
            "window width {width} exceeds sample length {t}"
        )));
    }
    let count = (t - width) / step + 1;
    let windows = (0..count).map(|k| (k * step, k * step + width)).collect();
    Ok(WindowPlan { width, step, windows })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WindowFlags {
    pub regularized: bool,
    pub low_df: bool,
    /// Why the window could not be estimated.
    pub error: Option<String>,
}

impl WindowFlags {
    pub fn any(&self) -> bool {
        self.regularized || self.low_df || self.error.is_some()
    }

    /// `;`-separated tokens, empty when clean.
    pub fn render(&self) -> String {
        let mut parts = Vec::new();
        if self.regularized {
            parts.push("regularized".to_string());
        }
        if self.low_df {
            parts.push("low_df".to_string());
        }
        if let Some(e) = &self.error {
            parts.push(format!("failed: {}", e.replace([',', ';', '\n'], " ")));
        }
        parts.join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub date: NaiveDate,
    pub start: usize,
    pub end: usize,
    pub grs: Option<GrsResult>,
    pub premium: Option<RiskPremiumEstimate>,
    pub flags: WindowFlags,
}

/// Window-top-dated estimates for every window of a plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingSeries {
    pub factor_ids: Vec<String>,
    pub windows: Vec<WindowRecord>,
}

impl RollingSeries {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.windows.iter().map(|w| w.date).collect()
    }

    pub fn grs(&self) -> Vec<Option<GrsResult>> {
        self.windows.iter().map(|w| w.grs).collect()
    }

    pub fn premiums(&self) -> Vec<Option<&RiskPremiumEstimate>> {
        self.windows.iter().map(|w| w.premium.as_ref()).collect()
    }

    /// `lambda +/- 1.96 se` for one factor, per window.
    pub fn ci_95(&self, factor: usize) -> Vec<Option<(f64, f64)>> {
        self.windows
            .iter()
            .map(|w| w.premium.as_ref().map(|p| p.confidence_band(Z_95)[factor]))
            .collect()
    }

    /// Lambda series for one factor, `None` for failed windows.
    pub fn lambda_series(&self, factor: usize) -> Vec<Option<f64>> {
        self.windows
            .iter()
            .map(|w| w.premium.as_ref().map(|p| p.lambda[factor]))
            .collect()
    }

    pub fn flagged_count(&self) -> usize {
        self.windows.iter().filter(|w| w.flags.any()).count()
    }

    pub fn failed_count(&self) -> usize {
        self.windows.iter().filter(|w| w.flags.error.is_some()).count()
    }

    fn factor_index(&self, id: &str) -> Result<usize> {
        self.factor_ids
            .iter()
            .position(|f| f == id)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown factor `{id}`")))
    }

    /// `date,statistic,df1,df2,p_value,crit_5pct,crit_10pct,flags`; failed
    /// windows keep their row with empty numeric cells.
    pub fn write_grs_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "statistic", "df1", "df2", "p_value", "crit_5pct", "crit_10pct", "flags"])?;
        for rec in &self.windows {
            let date = rec.date.format(DATE_FORMAT).to_string();
            let row = match &rec.grs {
                Some(g) => [
                    date,
                    g.statistic.to_string(),
                    g.df1.to_string(),
                    g.df2.to_string(),
                    g.p_value.to_string(),
                    g.crit_5pct.to_string(),
                    g.crit_10pct.to_string(),
                    rec.flags.render(),
                ],
                None => [
                    date,
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    rec.flags.render(),
                ],
            };
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Long format `date,factor,lambda,se,ci_lo,ci_hi`.
    pub fn write_premium_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "factor", "lambda", "se", "ci_lo", "ci_hi"])?;
        for rec in &self.windows {
            let date = rec.date.format(DATE_FORMAT).to_string();
            for (j, f) in self.factor_ids.iter().enumerate() {
                let row = match &rec.premium {
                    Some(p) => {
                        let (lo, hi) = p.confidence_band(Z_95)[j];
                        [
                            date.clone(),
                            f.clone(),
                            p.lambda[j].to_string(),
                            p.robust_se[j].to_string(),
                            lo.to_string(),
                            hi.to_string(),
                        ]
                    }
                    None => [date.clone(), f.clone(), String::new(), String::new(), String::new(), String::new()],
                };
                w.write_record(&row)?;
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RollOptions {
    /// Worker count; `None` uses the global pool.
    pub threads: Option<usize>,
    pub second_pass: SecondPassOptions,
}

fn estimate_window(
    panel: &AlignedPanel,
    start: usize,
    end: usize,
    crit: &Result<CriticalValues>,
    opts: SecondPassOptions,
) -> WindowRecord {
    let len = end - start;
    let date = panel.dates()[end - 1];
    let returns = panel.excess_returns().rows(start, len).into_owned();
    let factors = panel.factor_matrix().rows(start, len).into_owned();

    let run = || -> Result<(GrsResult, RiskPremiumEstimate)> {
        let crit = crit.as_ref().map_err(|e| Error::DegreesOfFreedom(e.to_string()))?;
        let fit = first_pass_matrices(&returns, &factors)?;
        let weight = fit.sigma_factor()?;
        let grs = grs_statistic_with(&fit, &weight, *crit)?;
        let premium = second_pass_with(&fit, &weight, &column_means(&returns), opts)?;
        Ok((grs, premium))
    };
    match run() {
        Ok((grs, premium)) => WindowRecord {
            date,
            start,
            end,
            flags: WindowFlags {
                regularized: grs.regularized,
                low_df: grs.low_df,
                error: None,
            },
            grs: Some(grs),
            premium: Some(premium),
        },
        Err(e) => WindowRecord {
            date,
            start,
            end,
            grs: None,
            premium: None,
            flags: WindowFlags {
                regularized: false,
                low_df: len < panel.n_assets() + panel.n_factors() + LOW_DF_THRESHOLD,
                error: Some(e.to_string()),
            },
        },
    }
}

/// Re-runs the first pass, GRS test and second pass on every window of
/// `plan`. Window failures become flagged records; the sweep never aborts.
pub fn roll(panel: &AlignedPanel, plan: &WindowPlan, opts: RollOptions) -> Result<RollingSeries> {
    if let Some(&(_, end)) = plan.windows.last() {
        if end > panel.len() {
            return Err(Error::InvalidArgument(format!(
                "plan reaches row {end} but the panel has {} rows",
                panel.len()
            )));
        }
    }
    let (n, m) = (panel.n_assets(), panel.n_factors());
    // every window has the same width, hence the same degrees of freedom
    let crit = if plan.width > n + m {
        CriticalValues::for_df(n, plan.width - n - m)
    } else {
        Err(Error::DegreesOfFreedom(format!(
            "window width {} leaves no degrees of freedom for n={n}, m={m}",
            plan.width
        )))
    };
    let windows = with_threads(opts.threads, || {
        plan.windows
            .par_iter()
            .map(|&(s, e)| estimate_window(panel, s, e, &crit, opts.second_pass))
            .collect::<Vec<_>>()
    })?;
    Ok(RollingSeries {
        factor_ids: panel.factor_ids().to_vec(),
        windows,
    })
}

/// Pearson correlation of two factors' rolling premium estimates, over
/// windows where both are available.
pub fn premium_correlation(series: &RollingSeries, factor_a: &str, factor_b: &str) -> Result<f64> {
    let a = series.factor_index(factor_a)?;
    let b = series.factor_index(factor_b)?;
    let pairs: Vec<(f64, f64)> = series
        .windows
        .iter()
        .filter_map(|w| w.premium.as_ref().map(|p| (p.lambda[a], p.lambda[b])))
        .collect();
    pearson(&pairs)
}

pub(crate) fn pearson(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData("correlation needs at least two points".into()));
    }
    let k = pairs.len() as f64;
    let (ma, mb) = pairs
        .iter()
        .fold((0.0, 0.0), |(x, y), (a, b)| (x + a / k, y + b / k));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in pairs {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::InvalidArgument("zero-variance premium series".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}
