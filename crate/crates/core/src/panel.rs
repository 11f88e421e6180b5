//! Asset/factor panel: CSV ingestion, return computation, calendar alignment
//! and excess returns.
//!
//! Everything downstream works on an [`AlignedPanel`], a balanced
//! date-indexed block of asset excess returns (`T x n`) and factor values
//! (`T x m`). Panels are immutable once built.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Default divisor turning an annualized money-market rate into a daily one.
pub const DEFAULT_RATE_DIVISOR: f64 = 245.0;

/// A named, strictly date-ordered series of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    id: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl RawSeries {
    pub fn new(id: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        let id = id.into();
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: dates.len(),
                actual: values.len(),
            });
        }
        for w in dates.windows(2) {
            if w[1] == w[0] {
                return Err(Error::DuplicateDate {
                    series: id,
                    date: w[1].to_string(),
                });
            }
            if w[1] < w[0] {
                return Err(Error::UnorderedDates {
                    series: id,
                    date: w[1].to_string(),
                });
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "series `{id}`: non-finite value at {}",
                dates[i]
            )));
        }
        Ok(Self { id, dates, values })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn observations(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.dates.iter().copied().zip(self.values.iter().copied())
    }

    pub fn renamed(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Applies `f` to every value, keeping dates.
    pub fn map_values(&self, id: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Self> {
        RawSeries::new(
            id,
            self.dates.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Writes `date,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "value"])?;
        for (d, v) in self.observations() {
            w.write_record([d.format(DATE_FORMAT).to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Column mapping for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    /// Value columns to read; `None` reads every non-date column.
    pub value_columns: Option<Vec<String>>,
    pub delimiter: u8,
    pub date_format: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            date_column: "date".to_string(),
            value_columns: None,
            delimiter: b',',
            date_format: DATE_FORMAT.to_string(),
        }
    }
}

impl CsvSchema {
    pub fn with_date_column(date_column: impl Into<String>) -> Self {
        Self {
            date_column: date_column.into(),
            ..Self::default()
        }
    }
}

/// Reads one [`RawSeries`] per value column. Rows may appear in any date
/// order; they are sorted before the series are built.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Vec<RawSeries>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(input: R, schema: &CsvSchema) -> Result<Vec<RawSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_idx = find(&schema.date_column)?;
    let columns: Vec<(usize, String)> = match &schema.value_columns {
        Some(cols) => cols
            .iter()
            .map(|c| find(c).map(|i| (i, c.clone())))
            .collect::<Result<_>>()?,
        None => header
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_idx)
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };
    if columns.is_empty() {
        return Err(Error::InvalidArgument(
            "schema selects no value columns".to_string(),
        ));
    }

    let mut rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let raw_date = record.get(date_idx).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, &schema.date_format).map_err(|_| {
            Error::BadDate {
                row: line,
                value: raw_date.to_string(),
            }
        })?;
        let mut values = Vec::with_capacity(columns.len());
        for (idx, name) in &columns {
            let cell = record.get(*idx).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::BadCell {
                    row: line,
                    column: name.clone(),
                    reason: "blank value".to_string(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| Error::BadCell {
                row: line,
                column: name.clone(),
                reason: format!("non-numeric value `{cell}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::BadCell {
                    row: line,
                    column: name.clone(),
                    reason: format!("non-finite value `{cell}`"),
                });
            }
            values.push(v);
        }
        rows.push((date, values));
    }
    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate {
            series: columns[0].1.clone(),
            date: w[0].0.to_string(),
        });
    }

    let dates: Vec<NaiveDate> = rows.iter().map(|(d, _)| *d).collect();
    columns
        .iter()
        .enumerate()
        .map(|(k, (_, name))| {
            RawSeries::new(name.clone(), dates.clone(), rows.iter().map(|r| r.1[k]).collect())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnKind {
    #[default]
    Log,
    Simple,
}

/// Period returns from a level series; the output is dated at the later
/// observation of each pair and is one shorter than the input.
pub fn to_returns(series: &RawSeries, kind: ReturnKind) -> Result<RawSeries> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "series `{}` needs at least 2 observations for returns",
            series.id
        )));
    }
    if kind == ReturnKind::Log {
        if let Some((i, &v)) = series.values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::NonPositive {
                series: series.id.clone(),
                index: i,
                value: v,
            });
        }
    }
    let values = series
        .values
        .windows(2)
        .map(|w| match kind {
            ReturnKind::Log => (w[1] / w[0]).ln(),
            ReturnKind::Simple => w[1] / w[0] - 1.0,
        })
        .collect();
    RawSeries::new(series.id.clone(), series.dates[1..].to_vec(), values)
}

/// Converts an annualized rate series to per-period units.
pub fn annual_to_period(rate: &RawSeries, divisor: f64) -> Result<RawSeries> {
    if !(divisor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rate divisor must be positive, got {divisor}"
        )));
    }
    rate.map_values(rate.id.clone(), |r| r / divisor)
}

/// Subtracts a per-period risk-free rate from every column of `returns`.
pub fn excess(returns: &DMatrix<f64>, risk_free: &[f64]) -> Result<DMatrix<f64>> {
    if returns.nrows() != risk_free.len() {
        return Err(Error::LengthMismatch {
            expected: returns.nrows(),
            actual: risk_free.len(),
        });
    }
    Ok(DMatrix::from_fn(returns.nrows(), returns.ncols(), |t, i| {
        returns[(t, i)] - risk_free[t]
    }))
}

/// Date-matched `returns - risk_free` on the dates both series share.
pub fn excess_series(returns: &RawSeries, risk_free: &RawSeries) -> Result<RawSeries> {
    let rf: BTreeMap<NaiveDate, f64> = risk_free.observations().collect();
    let (dates, values): (Vec<_>, Vec<_>) = returns
        .observations()
        .filter_map(|(d, r)| rf.get(&d).map(|f| (d, r - f)))
        .unzip();
    if dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    RawSeries::new(returns.id.clone(), dates, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Asset,
    Factor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSeries {
    pub series: RawSeries,
    pub role: Role,
}

impl TaggedSeries {
    pub fn asset(series: RawSeries) -> Self {
        Self {
            series,
            role: Role::Asset,
        }
    }

    pub fn factor(series: RawSeries) -> Self {
        Self {
            series,
            role: Role::Factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinMode {
    #[default]
    Intersection,
    UnionWithForwardFill,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CalendarPolicy {
    pub join_mode: JoinMode,
    /// Largest number of calendar days a value may be carried forward.
    pub max_fill_gap: u32,
}

impl CalendarPolicy {
    pub fn intersection() -> Self {
        Self::default()
    }

    pub fn forward_fill(max_fill_gap: u32) -> Self {
        Self {
            join_mode: JoinMode::UnionWithForwardFill,
            max_fill_gap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignAction {
    Kept,
    Dropped,
    Filled,
}

impl AlignAction {
    pub fn as_str(self) -> &'static str {
        match self {
            AlignAction::Kept => "kept",
            AlignAction::Dropped => "dropped",
            AlignAction::Filled => "filled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentEntry {
    pub date: NaiveDate,
    pub series: String,
    pub action: AlignAction,
}

/// Per (date, series) record of what alignment did.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentReport {
    pub entries: Vec<AlignmentEntry>,
}

impl AlignmentReport {
    pub fn count(&self, action: AlignAction) -> usize {
        self.entries.iter().filter(|e| e.action == action).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "series", "action"])?;
        for e in &self.entries {
            w.write_record([
                e.date.format(DATE_FORMAT).to_string().as_str(),
                e.series.as_str(),
                e.action.as_str(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Balanced panel of asset excess returns and factor values on a shared
/// calendar.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    dates: Vec<NaiveDate>,
    excess_returns: DMatrix<f64>,
    asset_ids: Vec<String>,
    factor_matrix: DMatrix<f64>,
    factor_ids: Vec<String>,
}

impl AlignedPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        excess_returns: DMatrix<f64>,
        asset_ids: Vec<String>,
        factor_matrix: DMatrix<f64>,
        factor_ids: Vec<String>,
    ) -> Result<Self> {
        let t = dates.len();
        if excess_returns.nrows() != t || factor_matrix.nrows() != t {
            return Err(Error::InvalidPanel(format!(
                "row counts differ: {} dates, {} return rows, {} factor rows",
                t,
                excess_returns.nrows(),
                factor_matrix.nrows()
            )));
        }
        if excess_returns.ncols() != asset_ids.len() || factor_matrix.ncols() != factor_ids.len() {
            return Err(Error::InvalidPanel(
                "column count does not match id list".to_string(),
            ));
        }
        let (n, m) = (asset_ids.len(), factor_ids.len());
        if m == 0 || n == 0 {
            return Err(Error::InvalidPanel(
                "need at least one asset and one factor".to_string(),
            ));
        }
        if m >= n {
            return Err(Error::InvalidPanel(format!(
                "factor count m={m} must be below asset count n={n}"
            )));
        }
        let mut seen = HashSet::new();
        for id in asset_ids.iter().chain(factor_ids.iter()) {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidPanel(format!("duplicate id `{id}`")));
            }
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPanel(
                "dates must be strictly increasing".to_string(),
            ));
        }
        if excess_returns.iter().chain(factor_matrix.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPanel("non-finite entry".to_string()));
        }
        Ok(Self {
            dates,
            excess_returns,
            asset_ids,
            factor_matrix,
            factor_ids,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn excess_returns(&self) -> &DMatrix<f64> {
        &self.excess_returns
    }

    pub fn factor_matrix(&self) -> &DMatrix<f64> {
        &self.factor_matrix
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn factor_ids(&self) -> &[String] {
        &self.factor_ids
    }

    /// Number of observations `T`.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_assets(&self) -> usize {
        self.asset_ids.len()
    }

    pub fn n_factors(&self) -> usize {
        self.factor_ids.len()
    }

    /// Rows `start..end` as a new panel.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "bad slice {start}..{end} of a {}-row panel",
                self.len()
            )));
        }
        let len = end - start;
        Ok(Self {
            dates: self.dates[start..end].to_vec(),
            excess_returns: self.excess_returns.rows(start, len).into_owned(),
            asset_ids: self.asset_ids.clone(),
            factor_matrix: self.factor_matrix.rows(start, len).into_owned(),
            factor_ids: self.factor_ids.clone(),
        })
    }

    /// Column means of the excess returns.
    pub fn mean_excess(&self) -> Vec<f64> {
        column_means(&self.excess_returns)
    }

    /// Splits the panel back into tagged series.
    pub fn to_series(&self) -> Vec<TaggedSeries> {
        let col = |m: &DMatrix<f64>, j: usize| m.column(j).iter().copied().collect::<Vec<_>>();
        let assets = self.asset_ids.iter().enumerate().map(|(j, id)| TaggedSeries {
            series: RawSeries {
                id: id.clone(),
                dates: self.dates.clone(),
                values: col(&self.excess_returns, j),
            },
            role: Role::Asset,
        });
        let factors = self.factor_ids.iter().enumerate().map(|(j, id)| TaggedSeries {
            series: RawSeries {
                id: id.clone(),
                dates: self.dates.clone(),
                values: col(&self.factor_matrix, j),
            },
            role: Role::Factor,
        });
        assets.chain(factors).collect()
    }

    /// Writes `date,<assets...>,<factors...>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["date".to_string()];
        header.extend(self.asset_ids.iter().cloned());
        header.extend(self.factor_ids.iter().cloned());
        w.write_record(&header)?;
        for (t, d) in self.dates.iter().enumerate() {
            let mut row = vec![d.format(DATE_FORMAT).to_string()];
            row.extend(self.excess_returns.row(t).iter().map(|v| v.to_string()));
            row.extend(self.factor_matrix.row(t).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// Reads a panel written by [`AlignedPanel::write_csv`]; `factor_ids`
    /// tags which columns are factors, every other column is an asset.
    pub fn read_csv<R: std::io::Read>(input: R, factor_ids: &[String]) -> Result<Self> {
        let series = read_csv(input, &CsvSchema::default())?;
        let tagged: Vec<TaggedSeries> = series
            .into_iter()
            .map(|s| {
                let role = if factor_ids.iter().any(|f| f == s.id()) {
                    Role::Factor
                } else {
                    Role::Asset
                };
                TaggedSeries { series: s, role }
            })
            .collect();
        for f in factor_ids {
            if !tagged.iter().any(|t| t.series.id() == f) {
                return Err(Error::MissingColumn(f.clone()));
            }
        }
        let (panel, _) = align(&tagged, CalendarPolicy::intersection())?;
        // keep the caller's factor order
        let order: Vec<usize> = factor_ids
            .iter()
            .map(|f| panel.factor_ids.iter().position(|g| g == f).unwrap())
            .collect();
        let factor_matrix = panel.factor_matrix.select_columns(order.iter());
        AlignedPanel::new(
            panel.dates,
            panel.excess_returns,
            panel.asset_ids,
            factor_matrix,
            factor_ids.to_vec(),
        )
    }
}

pub(crate) fn column_means(m: &DMatrix<f64>) -> Vec<f64> {
    let t = m.nrows() as f64;
    m.column_iter().map(|c| c.sum() / t).collect()
}

/// Joins tagged series onto one calendar under `policy`.
///
/// Intersection keeps only dates every series observes. Union with forward
/// fill keeps every date on which each series either has a value or can
/// carry its last value forward within `max_fill_gap` calendar days; dates
/// that precede a series' first observation are dropped.
pub fn align(
    series_list: &[TaggedSeries],
    policy: CalendarPolicy,
) -> Result<(AlignedPanel, AlignmentReport)> {
    if series_list.is_empty() {
        return Err(Error::InvalidArgument("no series to align".to_string()));
    }
    let lookups: Vec<BTreeMap<NaiveDate, f64>> = series_list
        .iter()
        .map(|s| s.series.observations().collect())
        .collect();
    let all_dates: BTreeSet<NaiveDate> = series_list
        .iter()
        .flat_map(|s| s.series.dates.iter().copied())
        .collect();

    let mut report = AlignmentReport::default();
    let mut dates = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); series_list.len()];

    match policy.join_mode {
        JoinMode::Intersection => {
            for &d in &all_dates {
                let keep = lookups.iter().all(|l| l.contains_key(&d));
                for (s, l) in series_list.iter().zip(&lookups) {
                    if l.contains_key(&d) {
                        let action = if keep {
                            AlignAction::Kept
                        } else {
                            AlignAction::Dropped
                        };
                        report.entries.push(AlignmentEntry {
                            date: d,
                            series: s.series.id.clone(),
                            action,
                        });
                    }
                }
                if keep {
                    for (k, l) in lookups.iter().enumerate() {
                        columns[k].push(l[&d]);
                    }
                    dates.push(d);
                }
            }
        }
        JoinMode::UnionWithForwardFill => {
            for &d in &all_dates {
                // (value, filled) per series, None if the series has not started
                let mut row: Vec<Option<(f64, bool)>> = Vec::with_capacity(lookups.len());
                for (s, l) in series_list.iter().zip(&lookups) {
                    if let Some(&v) = l.get(&d) {
                        row.push(Some((v, false)));
                    } else if let Some((&last, &v)) = l.range(..d).next_back() {
                        let gap = (d - last).num_days();
                        if gap > i64::from(policy.max_fill_gap) {
                            return Err(Error::FillGapExceeded {
                                series: s.series.id.clone(),
                                date: d.to_string(),
                                gap_days: gap,
                                limit: policy.max_fill_gap,
                            });
                        }
                        row.push(Some((v, true)));
                    } else {
                        row.push(None);
                    }
                }
                let keep = row.iter().all(Option::is_some);
                for (k, s) in series_list.iter().enumerate() {
                    let action = match row[k] {
                        Some((_, false)) if keep => AlignAction::Kept,
                        Some((_, true)) if keep => AlignAction::Filled,
                        Some((_, false)) => AlignAction::Dropped,
                        _ => continue,
                    };
                    report.entries.push(AlignmentEntry {
                        date: d,
                        series: s.series.id.clone(),
                        action,
                    });
                }
                if keep {
                    for (k, cell) in row.iter().enumerate() {
                        columns[k].push(cell.unwrap().0);
                    }
                    dates.push(d);
                }
            }
        }
    }

    if dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let t = dates.len();
    let pick = |role: Role| -> (Vec<String>, DMatrix<f64>) {
        let idx: Vec<usize> = series_list
            .iter()
            .enumerate()
            .filter(|(_, s)| s.role == role)
            .map(|(k, _)| k)
            .collect();
        let ids = idx.iter().map(|&k| series_list[k].series.id.clone()).collect();
        let m = DMatrix::from_fn(t, idx.len(), |r, c| columns[idx[c]][r]);
        (ids, m)
    };
    let (asset_ids, returns) = pick(Role::Asset);
    let (factor_ids, factors) = pick(Role::Factor);
    let panel = AlignedPanel::new(dates, returns, asset_ids, factors, factor_ids)?;
    Ok((panel, report))
}
