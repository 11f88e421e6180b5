use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{AssetInput, FactorSource, RunConfig};
use crate::error::{Error, Result};
use crate::factors::build_factor;
use crate::fmb::{first_pass, second_pass_with, SecondPassOptions};
use crate::grs::{grs_statistic, LOW_DF_THRESHOLD};
use crate::panel::{
    align, annual_to_period, excess_series, load_csv, to_returns, AlignAction, AlignedPanel, AlignmentReport,
    JoinMode, RawSeries, TaggedSeries,
};
use crate::rolling::{plan_windows, premium_correlation, roll, RollOptions, Z_95};
use crate::simkit::{mc_experiment, simulate, DgpSpec, DESK_STRUCTURE_SEED};
use crate::stationarity::{adf_test, schwert_max_lag};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PANEL_FILE: &str = "panel.csv";
const MANIFEST_FORMAT: &str = "apt-roll-panel/1";

/// What a command did: human-readable summary lines, warnings, written
/// files and the number of non-fatal errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub errors: usize,
}

impl Outcome {
    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub name: String,
    pub path: String,
    pub sha256: String,
}

/// Sidecar describing an ingested panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub rows: usize,
    pub n_assets: usize,
    pub n_factors: usize,
    pub first_date: String,
    pub last_date: String,
    pub asset_ids: Vec<String>,
    pub factor_ids: Vec<String>,
    pub panel_file: String,
    pub panel_sha256: String,
    pub join: String,
    pub max_fill_gap: u32,
    pub dates_kept: usize,
    pub dates_dropped: usize,
    pub values_filled: usize,
    pub inputs: Vec<InputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Result of building a panel from raw inputs.
pub struct Ingested {
    pub panel: AlignedPanel,
    pub report: AlignmentReport,
    pub factors: Vec<RawSeries>,
    pub inputs: Vec<InputRecord>,
}

/// Loads every input, builds factors and asset excess returns, and aligns.
pub fn build_panel(cfg: &RunConfig) -> Result<Ingested> {
    cfg.check_files()?;
    if cfg.assets.is_empty() {
        return Err(Error::Config("`assets` lists no series".into()));
    }
    if cfg.factors.is_empty() {
        return Err(Error::Config("no `factor.<ID>` definitions".into()));
    }
    let mut pool: HashMap<String, RawSeries> = HashMap::new();
    let mut records = Vec::new();
    for input in &cfg.inputs {
        let bytes = fs::read(&input.path).map_err(|e| Error::io(&input.path, e))?;
        records.push(InputRecord {
            name: input.name.clone(),
            path: input.path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        for s in load_csv(&input.path, &input.schema)? {
            if pool.contains_key(s.id()) {
                return Err(Error::Config(format!(
                    "series `{}` appears in more than one input",
                    s.id()
                )));
            }
            pool.insert(s.id().to_string(), s);
        }
    }
    let lookup = |name: &str| {
        pool.get(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };

    let mut factors = Vec::new();
    for f in &cfg.factors {
        let built = match f {
            FactorSource::Built(spec) => build_factor(spec, &pool)?,
            FactorSource::Raw { id, column } => lookup(column)?.clone().renamed(id.as_str()),
        };
        factors.push(built);
    }

    let rf = cfg
        .risk_free
        .as_deref()
        .map(|name| annual_to_period(lookup(name)?, cfg.rate_divisor))
        .transpose()?;
    let mut tagged = Vec::new();
    for name in &cfg.assets {
        let s = lookup(name)?;
        let r = match cfg.asset_input {
            AssetInput::Levels => to_returns(s, cfg.return_kind)?,
            AssetInput::Returns => s.clone(),
        };
        let r = match &rf {
            Some(rf) => excess_series(&r, rf)?,
            None => r,
        };
        tagged.push(TaggedSeries::asset(r.renamed(name.as_str())));
    }
    tagged.extend(factors.iter().cloned().map(TaggedSeries::factor));
    let (panel, report) = align(&tagged, cfg.policy)?;
    Ok(Ingested {
        panel,
        report,
        factors,
        inputs: records,
    })
}

fn manifest_for(panel: &AlignedPanel, panel_bytes: &[u8], report: Option<&AlignmentReport>, cfg: &RunConfig, inputs: Vec<InputRecord>) -> Manifest {
    let count = |a| report.map_or(0, |r| r.count(a));
    Manifest {
        format: MANIFEST_FORMAT.into(),
        rows: panel.len(),
        n_assets: panel.n_assets(),
        n_factors: panel.n_factors(),
        first_date: panel.dates()[0].to_string(),
        last_date: panel.dates()[panel.len() - 1].to_string(),
        asset_ids: panel.asset_ids().to_vec(),
        factor_ids: panel.factor_ids().to_vec(),
        panel_file: PANEL_FILE.into(),
        panel_sha256: sha256_hex(panel_bytes),
        join: match cfg.policy.join_mode {
            JoinMode::Intersection => "intersection".into(),
            JoinMode::UnionWithForwardFill => "forward_fill".into(),
        },
        max_fill_gap: cfg.policy.max_fill_gap,
        dates_kept: count(AlignAction::Kept),
        dates_dropped: count(AlignAction::Dropped),
        values_filled: count(AlignAction::Filled),
        inputs,
    }
}

fn write_panel_with_manifest(
    out: &mut Outcome,
    dir: &Path,
    panel: &AlignedPanel,
    report: Option<&AlignmentReport>,
    cfg: &RunConfig,
    inputs: Vec<InputRecord>,
) -> Result<()> {
    let bytes = csv_bytes(|b| panel.write_csv(b))?;
    let manifest = manifest_for(panel, &bytes, report, cfg, inputs);
    out.write(dir.join(PANEL_FILE), &bytes)?;
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    out.write(dir.join(MANIFEST_FILE), &json)
}

/// Reads a panel written by `ingest` or `simulate`. `path` is the output
/// directory or its manifest file.
pub fn read_ingested(path: &Path) -> Result<(AlignedPanel, Manifest)> {
    let manifest_path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    if !manifest_path.exists() {
        return Err(Error::MissingFile(manifest_path));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let panel_path = manifest_path.with_file_name(&manifest.panel_file);
    if !panel_path.exists() {
        return Err(Error::MissingFile(panel_path));
    }
    let bytes = fs::read(&panel_path).map_err(|e| Error::io(&panel_path, e))?;
    if sha256_hex(&bytes) != manifest.panel_sha256 {
        return Err(Error::Config(format!(
            "{} does not match the hash in {}",
            panel_path.display(),
            manifest_path.display()
        )));
    }
    let panel = AlignedPanel::read_csv(bytes.as_slice(), &manifest.factor_ids)?;
    Ok((panel, manifest))
}

/// The panel a command works on: a cached ingest if `panel` is set,
/// otherwise built from the inputs.
pub fn resolve_panel(cfg: &RunConfig) -> Result<AlignedPanel> {
    match &cfg.panel {
        Some(p) => {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()));
            }
            read_ingested(p).map(|(panel, _)| panel)
        }
        None => build_panel(cfg).map(|i| i.panel),
    }
}

pub fn ingest(cfg: &RunConfig) -> Result<Outcome> {
    let ing = build_panel(cfg)?;
    ensure_dir(&cfg.out)?;
    let mut out = Outcome::default();
    write_panel_with_manifest(&mut out, &cfg.out, &ing.panel, Some(&ing.report), cfg, ing.inputs)?;
    let report = csv_bytes(|b| ing.report.write_csv(b))?;
    out.write(cfg.out.join("alignment_report.csv"), &report)?;
    for f in &ing.factors {
        let bytes = csv_bytes(|b| f.write_csv(b))?;
        out.write(cfg.out.join(format!("factor_{}.csv", f.id())), &bytes)?;
    }
    let p = &ing.panel;
    out.lines.push(format!(
        "panel: {} rows x {} assets x {} factors, {} to {}",
        p.len(),
        p.n_assets(),
        p.n_factors(),
        p.dates()[0],
        p.dates()[p.len() - 1]
    ));
    out.lines.push(format!(
        "alignment: {} dates kept, {} dropped, {} values filled",
        ing.report.count(AlignAction::Kept),
        ing.report.count(AlignAction::Dropped),
        ing.report.count(AlignAction::Filled)
    ));
    Ok(out)
}

pub fn adf(cfg: &RunConfig) -> Result<Outcome> {
    let panel = resolve_panel(cfg)?;
    let max_lag = cfg.adf_max_lag.unwrap_or_else(|| schwert_max_lag(panel.len()));
    let mut out = Outcome::default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "series", "role", "nobs", "chosen_lag", "statistic", "crit_1pct", "crit_5pct", "crit_10pct",
        "reject_1pct", "reject_5pct", "reject_10pct", "note",
    ])?;
    let columns = panel
        .factor_ids()
        .iter()
        .zip(panel.factor_matrix().column_iter())
        .map(|(id, c)| (id, "factor", c))
        .chain(
            panel
                .asset_ids()
                .iter()
                .zip(panel.excess_returns().column_iter())
                .map(|(id, c)| (id, "asset", c)),
        );
    let mut rejected = 0;
    let mut total = 0;
    for (id, role, col) in columns {
        total += 1;
        let values: Vec<f64> = col.iter().copied().collect();
        match adf_test(&values, max_lag, cfg.adf_deterministic) {
            Ok(r) => {
                let d = r.decisions();
                rejected += d[0] as usize;
                let mut rec = vec![id.clone(), role.into(), r.nobs.to_string(), r.chosen_lag.to_string(), r.statistic.to_string()];
                rec.extend(r.critical.iter().map(|c| c.to_string()));
                rec.extend(d.iter().map(|b| b.to_string()));
                rec.push(String::new());
                w.write_record(&rec)?;
            }
            Err(e) => {
                out.errors += 1;
                out.warnings.push(format!("ADF failed for {id}: {e}"));
                let mut rec = vec![id.clone(), role.into()];
                rec.extend(std::iter::repeat_n(String::new(), 9));
                rec.push(e.to_string());
                w.write_record(&rec)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    ensure_dir(&cfg.out)?;
    out.write(cfg.out.join("adf.csv"), &bytes)?;
    out.lines.push(format!(
        "adf: {rejected} of {total} series reject a unit root at 1% (max lag {max_lag})"
    ));
    Ok(out)
}

fn second_pass_options(cfg: &RunConfig) -> SecondPassOptions {
    SecondPassOptions {
        shanken: cfg.shanken,
        intercept: cfg.cs_intercept,
    }
}

pub fn estimate(cfg: &RunConfig) -> Result<Outcome> {
    let panel = resolve_panel(cfg)?;
    let fit = first_pass(&panel)?;
    let weight = fit.sigma_factor()?;
    let grs = grs_statistic(&fit)?;
    let prem = second_pass_with(&fit, &weight, &panel.mean_excess(), second_pass_options(cfg))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["factor", "lambda", "robust_se", "t_stat", "ci95_lo", "ci95_hi", "expected_premium"])?;
    let band = prem.confidence_band(Z_95);
    for (j, id) in panel.factor_ids().iter().enumerate() {
        let se = prem.robust_se[j];
        let t = if se > 0.0 { (prem.lambda[j] / se).to_string() } else { String::new() };
        w.write_record([
            id.clone(),
            prem.lambda[j].to_string(),
            se.to_string(),
            t,
            band[j].0.to_string(),
            band[j].1.to_string(),
            prem.expected_premium[j].to_string(),
        ])?;
    }
    if let Some((c, se)) = prem.intercept {
        w.write_record(["intercept".into(), c.to_string(), se.to_string(), (c / se).to_string(), String::new(), String::new(), String::new()])?;
    }
    let estimates = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;

    let mut g = csv::Writer::from_writer(Vec::new());
    g.write_record(["first_date", "last_date", "statistic", "df1", "df2", "p_value", "crit_5pct", "crit_10pct", "flags"])?;
    let mut flags = Vec::new();
    if grs.regularized {
        flags.push("regularized");
    }
    if grs.low_df {
        flags.push("low_df");
    }
    g.write_record([
        panel.dates()[0].to_string(),
        panel.dates()[panel.len() - 1].to_string(),
        grs.statistic.to_string(),
        grs.df1.to_string(),
        grs.df2.to_string(),
        grs.p_value.to_string(),
        grs.crit_5pct.to_string(),
        grs.crit_10pct.to_string(),
        flags.join(";"),
    ])?;
    let grs_bytes = g.into_inner().map_err(|e| Error::Config(e.to_string()))?;

    ensure_dir(&cfg.out)?;
    let mut out = Outcome::default();
    out.write(cfg.out.join("estimates.csv"), &estimates)?;
    out.write(cfg.out.join("grs_full_sample.csv"), &grs_bytes)?;
    out.lines.push(format!(
        "GRS = {:.4} ~ F({}, {}), p = {:.4}",
        grs.statistic, grs.df1, grs.df2, grs.p_value
    ));
    for (j, id) in panel.factor_ids().iter().enumerate() {
        out.lines.push(format!(
            "{id}: lambda = {:.6e} (se {:.3e}), mean = {:.6e}",
            prem.lambda[j], prem.robust_se[j], prem.expected_premium[j]
        ));
    }
    if grs.low_df {
        out.warnings.push(format!("only {} denominator degrees of freedom", grs.df2));
    }
    Ok(out)
}

pub fn rolling(cfg: &RunConfig) -> Result<Outcome> {
    let panel = resolve_panel(cfg)?;
    let (n, m) = (panel.n_assets(), panel.n_factors());
    let plan = plan_windows(panel.len(), cfg.window, cfg.step)?;
    let mut out = Outcome::default();
    if cfg.window < n + m + 1 + LOW_DF_THRESHOLD {
        out.warnings.push(format!(
            "window {} is below n + m + {} = {}; windows will be flagged low_df",
            cfg.window,
            1 + LOW_DF_THRESHOLD,
            n + m + 1 + LOW_DF_THRESHOLD
        ));
    }
    let series = roll(
        &panel,
        &plan,
        RollOptions {
            threads: cfg.threads,
            second_pass: second_pass_options(cfg),
        },
    )?;

    ensure_dir(&cfg.out)?;
    out.write(cfg.out.join("rolling_grs.csv"), &csv_bytes(|b| series.write_grs_csv(b))?)?;
    out.write(cfg.out.join("rolling_premiums.csv"), &csv_bytes(|b| series.write_premium_csv(b))?)?;
    if m > 1 {
        let ids = panel.factor_ids();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["factor".to_string()];
        header.extend(ids.iter().cloned());
        w.write_record(&header)?;
        for a in ids {
            let mut rec = vec![a.clone()];
            for b in ids {
                rec.push(premium_correlation(&series, a, b).map_or(String::new(), |r| r.to_string()));
            }
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        out.write(cfg.out.join("rolling_premium_corr.csv"), &bytes)?;
    }
    if cfg.json {
        let mut bytes = Vec::new();
        series.write_json(&mut bytes)?;
        bytes.push(b'\n');
        out.write(cfg.out.join("rolling.json"), &bytes)?;
    }

    let grs: Vec<_> = series.grs().into_iter().flatten().collect();
    out.lines.push(format!(
        "windows: {} (width {}, step {}), flagged {}, failed {}",
        series.len(),
        plan.width,
        plan.step,
        series.flagged_count(),
        series.failed_count()
    ));
    for &level in &cfg.levels {
        let k = grs.iter().filter(|g| g.rejects_at(level)).count();
        out.lines.push(format!(
            "GRS rejections at {:.0}%: {k} of {} windows",
            level * 100.0,
            grs.len()
        ));
    }
    Ok(out)
}

fn sim_spec(cfg: &RunConfig) -> Result<DgpSpec> {
    let s = &cfg.sim;
    let mut spec = match (s.n, s.m) {
        (None, None) => {
            let seed = s.structure_seed.unwrap_or(DESK_STRUCTURE_SEED);
            let d = DgpSpec::desk_default();
            DgpSpec::random(d.n, d.m, s.t.unwrap_or(d.t), seed)
        }
        (Some(n), Some(m)) => DgpSpec::random(n, m, s.t.unwrap_or(6300), s.structure_seed.unwrap_or(DESK_STRUCTURE_SEED)),
        _ => return Err(Error::Config("set both `sim.n` and `sim.m`, or neither".into())),
    };
    // alpha_i = scale * residual sd_i / sqrt(T)
    let t = spec.t as f64;
    spec.alpha = (0..spec.n)
        .map(|i| s.alpha_scale * spec.resid_cov[(i, i)].sqrt() / t.sqrt())
        .collect();
    spec.innovations = s.innovations;
    spec.seed = cfg.seed;
    Ok(spec)
}

pub fn simulate_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let spec = sim_spec(cfg)?;
    ensure_dir(&cfg.out)?;
    let mut out = Outcome::default();
    if cfg.sim.write_panel {
        let panel = simulate(&spec)?;
        write_panel_with_manifest(&mut out, &cfg.out, &panel, None, cfg, Vec::new())?;
        out.lines.push(format!(
            "simulated panel: {} rows x {} assets x {} factors (seed {})",
            panel.len(),
            panel.n_assets(),
            panel.n_factors(),
            spec.seed
        ));
    }
    if cfg.sim.reps > 0 {
        let level = cfg.levels[0];
        let report = mc_experiment(&spec, cfg.sim.reps, level, cfg.threads)?;
        out.write(cfg.out.join("mc_replications.csv"), &csv_bytes(|b| report.write_rows_csv(b))?)?;
        out.write(cfg.out.join("mc_summary.csv"), &csv_bytes(|b| report.write_summary_csv(b))?)?;
        if cfg.json {
            let mut bytes = serde_json::to_vec_pretty(&report)?;
            bytes.push(b'\n');
            out.write(cfg.out.join("mc_report.json"), &bytes)?;
        }
        out.lines.push(format!(
            "monte carlo: {} replications, rejection rate {:.4} at {:.0}%, {} failures",
            report.reps,
            report.rejection_rate,
            level * 100.0,
            report.failures
        ));
        out.errors += report.failures;
    }
    Ok(out)
}
