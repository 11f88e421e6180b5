//! Risk-factor construction from raw market series.
//!
//! The slice-level builders work on already aligned inputs. [`build_factor`]
//! dispatches a [`FactorSpec`] over dated [`RawSeries`], joining its inputs on
//! their common dates first.

use std::collections::{BTreeSet, HashMap, VecDeque};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{annual_to_period, excess_series, to_returns, RawSeries, ReturnKind, DEFAULT_RATE_DIVISOR};

/// Default smoothing span for the ex-ante real rate.
pub const DEFAULT_UI_WINDOW: usize = 60;

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// Market return minus the risk-free rate.
pub fn build_excess_market(market_returns: &[f64], risk_free: &[f64]) -> Result<Vec<f64>> {
    same_len(market_returns, risk_free)?;
    Ok(market_returns.iter().zip(risk_free).map(|(m, f)| m - f).collect())
}

/// `long - short`, for yield and credit spreads.
pub fn build_spread(long_leg: &[f64], short_leg: &[f64]) -> Result<Vec<f64>> {
    same_len(long_leg, short_leg)?;
    Ok(long_leg.iter().zip(short_leg).map(|(l, s)| l - s).collect())
}

/// `ln(forward) - ln(spot)`, for commodity forward spreads and currency
/// forward premia.
pub fn build_log_spread(forward: &[f64], spot: &[f64]) -> Result<Vec<f64>> {
    same_len(forward, spot)?;
    forward
        .iter()
        .zip(spot)
        .enumerate()
        .map(|(i, (&f, &s))| {
            if f <= 0.0 || s <= 0.0 {
                return Err(Error::NonPositive {
                    series: if f <= 0.0 { "forward" } else { "spot" }.to_string(),
                    index: i,
                    value: if f <= 0.0 { f } else { s },
                });
            }
            Ok((f / s).ln())
        })
        .collect()
}

/// Streaming state for unexpected inflation: a trailing window of ex-post
/// real rates `r_f - I`.
#[derive(Debug, Clone, PartialEq)]
pub struct UiState {
    window_k: usize,
    history: VecDeque<f64>,
}

impl UiState {
    pub fn new(window_k: usize) -> Result<Self> {
        if window_k == 0 {
            return Err(Error::InvalidArgument("UI window must be at least 1".into()));
        }
        Ok(Self {
            window_k,
            history: VecDeque::with_capacity(window_k + 1),
        })
    }

    pub fn window_k(&self) -> usize {
        self.window_k
    }

    pub fn history(&self) -> impl Iterator<Item = &f64> {
        self.history.iter()
    }

    pub fn is_warm(&self) -> bool {
        self.history.len() == self.window_k
    }

    /// Feeds one period; returns `UI_t` once the window is full.
    ///
    /// `E_{t-1}[I_t] = r_{f,t} - mean(rr_{t-k..t-1})` and `UI_t = I_t - E_{t-1}[I_t]`.
    pub fn update(&mut self, inflation: f64, risk_free: f64) -> Option<f64> {
        let out = self.is_warm().then(|| {
            let ex_ante = self.history.iter().sum::<f64>() / self.window_k as f64;
            inflation - (risk_free - ex_ante)
        });
        self.history.push_back(risk_free - inflation);
        if self.history.len() > self.window_k {
            self.history.pop_front();
        }
        out
    }
}

/// Unexpected inflation; `values[i]` belongs to input index `burn_in + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct UiSeries {
    pub values: Vec<f64>,
    pub burn_in: usize,
}

pub fn build_ui(inflation: &[f64], risk_free: &[f64], state: &mut UiState) -> Result<UiSeries> {
    same_len(inflation, risk_free)?;
    let burn_in = state.window_k.saturating_sub(state.history.len());
    if inflation.len() <= burn_in {
        return Err(Error::InsufficientData(format!(
            "unexpected inflation needs more than {burn_in} observations, got {}",
            inflation.len()
        )));
    }
    let values = inflation
        .iter()
        .zip(risk_free)
        .filter_map(|(&i, &f)| state.update(i, f))
        .collect();
    Ok(UiSeries { values, burn_in })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VixTransform {
    #[default]
    LogDiff,
    Diff,
    Level,
}

/// Volatility-index factor. Difference transforms are one shorter than the
/// input and belong to the later date.
pub fn build_vix_factor(levels: &[f64], transform: VixTransform) -> Result<Vec<f64>> {
    if let Some((i, &v)) = levels.iter().enumerate().find(|(_, v)| **v <= 0.0) {
        return Err(Error::NonPositive {
            series: "volatility index".into(),
            index: i,
            value: v,
        });
    }
    Ok(match transform {
        VixTransform::LogDiff => levels.windows(2).map(|w| (w[1] / w[0]).ln()).collect(),
        VixTransform::Diff => levels.windows(2).map(|w| w[1] - w[0]).collect(),
        VixTransform::Level => levels.to_vec(),
    })
}

pub fn demean(values: &[f64]) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    values.iter().map(|v| v - mean).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// `[market levels, annual risk-free rate]`
    ExcessReturn,
    /// `[index levels]`
    IndexReturn,
    /// `[forward, spot]`
    ForwardSpread,
    /// `[long yield, short rate]`
    YieldSpread,
    /// `[corporate yield, government yield]`
    CreditSpread,
    /// `[forward rate, spot rate]`
    ForwardPremium,
    /// `[per-period inflation, annual risk-free rate]`
    UnexpectedInflation,
    /// `[volatility index levels]`
    VolatilityChange,
}

impl Recipe {
    pub fn arity(self) -> usize {
        match self {
            Recipe::IndexReturn | Recipe::VolatilityChange => 1,
            _ => 2,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "excess_return" => Recipe::ExcessReturn,
            "index_return" => Recipe::IndexReturn,
            "forward_spread" => Recipe::ForwardSpread,
            "yield_spread" => Recipe::YieldSpread,
            "credit_spread" => Recipe::CreditSpread,
            "forward_premium" => Recipe::ForwardPremium,
            "unexpected_inflation" => Recipe::UnexpectedInflation,
            "volatility_change" => Recipe::VolatilityChange,
            other => return Err(Error::Config(format!("unknown factor recipe `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorParams {
    pub return_kind: ReturnKind,
    /// Annual-to-period divisor applied to risk-free inputs.
    pub rate_divisor: f64,
    pub ui_window: usize,
    pub vix: VixTransform,
    /// Log differences for forward spreads/premia; arithmetic otherwise.
    pub log_spread: bool,
    pub demean: bool,
}

impl Default for FactorParams {
    fn default() -> Self {
        Self {
            return_kind: ReturnKind::Log,
            rate_divisor: DEFAULT_RATE_DIVISOR,
            ui_window: DEFAULT_UI_WINDOW,
            vix: VixTransform::LogDiff,
            log_spread: true,
            demean: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub id: String,
    pub recipe: Recipe,
    pub inputs: Vec<String>,
    pub params: FactorParams,
}

impl FactorSpec {
    pub fn new(id: impl Into<String>, recipe: Recipe, inputs: &[&str]) -> Self {
        Self {
            id: id.into(),
            recipe,
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            params: FactorParams::default(),
        }
    }
}

/// Restricts every series to the dates all of them share.
fn on_common_dates(series: &[&RawSeries]) -> Result<(Vec<NaiveDate>, Vec<Vec<f64>>)> {
    let mut common: BTreeSet<NaiveDate> = series[0].dates().iter().copied().collect();
    for s in &series[1..] {
        let other: BTreeSet<NaiveDate> = s.dates().iter().copied().collect();
        common = common.intersection(&other).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let values = series
        .iter()
        .map(|s| s.observations().filter(|(d, _)| common.contains(d)).map(|(_, v)| v).collect())
        .collect();
    Ok((common.into_iter().collect(), values))
}

/// Builds one factor series from named inputs.
pub fn build_factor(spec: &FactorSpec, inputs: &HashMap<String, RawSeries>) -> Result<RawSeries> {
    if spec.inputs.len() != spec.recipe.arity() {
        return Err(Error::Config(format!(
            "factor `{}`: recipe {:?} takes {} inputs, got {}",
            spec.id,
            spec.recipe,
            spec.recipe.arity(),
            spec.inputs.len()
        )));
    }
    let resolved: Vec<&RawSeries> = spec
        .inputs
        .iter()
        .map(|name| {
            inputs
                .get(name)
                .ok_or_else(|| Error::Config(format!("factor `{}`: unknown input `{name}`", spec.id)))
        })
        .collect::<Result<_>>()?;
    let p = &spec.params;

    let out = match spec.recipe {
        Recipe::ExcessReturn => {
            let r = to_returns(resolved[0], p.return_kind)?;
            let rf = annual_to_period(resolved[1], p.rate_divisor)?;
            excess_series(&r, &rf)?
        }
        Recipe::IndexReturn => to_returns(resolved[0], p.return_kind)?,
        Recipe::YieldSpread | Recipe::CreditSpread => {
            let (dates, v) = on_common_dates(&resolved)?;
            RawSeries::new(&spec.id, dates, build_spread(&v[0], &v[1])?)?
        }
        Recipe::ForwardSpread | Recipe::ForwardPremium => {
            let (dates, v) = on_common_dates(&resolved)?;
            let values = if p.log_spread {
                build_log_spread(&v[0], &v[1])?
            } else {
                build_spread(&v[0], &v[1])?
            };
            RawSeries::new(&spec.id, dates, values)?
        }
        Recipe::UnexpectedInflation => {
            let rf = annual_to_period(resolved[1], p.rate_divisor)?;
            let (dates, v) = on_common_dates(&[resolved[0], &rf])?;
            let mut state = UiState::new(p.ui_window)?;
            let ui = build_ui(&v[0], &v[1], &mut state)?;
            RawSeries::new(&spec.id, dates[ui.burn_in..].to_vec(), ui.values)?
        }
        Recipe::VolatilityChange => {
            let s = resolved[0];
            let values = build_vix_factor(s.values(), p.vix)?;
            let skip = s.len() - values.len();
            RawSeries::new(&spec.id, s.dates()[skip..].to_vec(), values)?
        }
    };
    let out = out.renamed(&spec.id);
    if p.demean {
        let values = demean(out.values());
        RawSeries::new(&spec.id, out.dates().to_vec(), values)
    } else {
        Ok(out)
    }
}
