//! Flat `key = value` run configuration.
//!
//! Precedence, lowest first: config file, `APT_ROLL_*` environment
//! variables, `--set key=value` pairs, dedicated command-line flags.
//! An environment variable matches a key after upper-casing it and mapping
//! every non-alphanumeric character to `_` (`factor.UI.window_k` is
//! `APT_ROLL_FACTOR_UI_WINDOW_K`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::factors::{FactorParams, FactorSpec, Recipe, VixTransform};
use crate::panel::{CalendarPolicy, CsvSchema, JoinMode, ReturnKind, DEFAULT_RATE_DIVISOR};
use crate::rolling::DEFAULT_WINDOW;
use crate::simkit::Innovations;
use crate::stationarity::Deterministic;

pub const ENV_PREFIX: &str = "APT_ROLL_";

/// Scalar keys that may be set from the environment even when absent from
/// the file.
pub const KNOWN_KEYS: &[&str] = &[
    "assets",
    "assets.input",
    "returns",
    "risk_free",
    "rate_divisor",
    "join",
    "max_fill_gap",
    "panel",
    "window",
    "step",
    "threads",
    "out",
    "seed",
    "levels",
    "adf.max_lag",
    "adf.deterministic",
    "shanken",
    "cs_intercept",
    "json",
    "sim.n",
    "sim.m",
    "sim.t",
    "sim.reps",
    "sim.alpha_scale",
    "sim.innovations",
    "sim.structure_seed",
    "sim.write_panel",
];

#[derive(Debug, Clone, PartialEq)]
pub struct InputSpec {
    pub name: String,
    pub path: PathBuf,
    pub schema: CsvSchema,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssetInput {
    #[default]
    Levels,
    Returns,
}

/// A factor definition from the config: either a construction recipe or a
/// column taken as is.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorSource {
    Built(FactorSpec),
    Raw { id: String, column: String },
}

impl FactorSource {
    pub fn id(&self) -> &str {
        match self {
            FactorSource::Built(s) => &s.id,
            FactorSource::Raw { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub t: Option<usize>,
    pub reps: usize,
    pub alpha_scale: f64,
    pub innovations: Innovations,
    pub structure_seed: Option<u64>,
    pub write_panel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<InputSpec>,
    pub assets: Vec<String>,
    pub asset_input: AssetInput,
    pub return_kind: ReturnKind,
    pub risk_free: Option<String>,
    pub rate_divisor: f64,
    pub factors: Vec<FactorSource>,
    pub policy: CalendarPolicy,
    /// Directory (or manifest file) of a previously ingested panel.
    pub panel: Option<PathBuf>,
    pub window: usize,
    pub step: usize,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub seed: u64,
    pub levels: Vec<f64>,
    pub adf_max_lag: Option<usize>,
    pub adf_deterministic: Deterministic,
    pub shanken: bool,
    pub cs_intercept: bool,
    pub json: bool,
    pub sim: SimSettings,
    /// Fully merged key/value view the config was built from.
    pub raw: BTreeMap<String, String>,
}

pub fn env_name(key: &str) -> String {
    let mut s = String::from(ENV_PREFIX);
    s.extend(key.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }));
    s
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Parses a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{s}` is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{v}`"))),
    }
}

impl RunConfig {
    /// Merges the sources and builds a config. `base_dir` resolves relative
    /// paths (normally the config file's directory).
    pub fn from_sources(
        file: BTreeMap<String, String>,
        env: &[(String, String)],
        overrides: &[(String, String)],
        base_dir: &Path,
    ) -> Result<Self> {
        let mut raw = file;
        let candidates: Vec<String> = raw
            .keys()
            .cloned()
            .chain(KNOWN_KEYS.iter().map(|s| s.to_string()))
            .collect();
        for (name, value) in env {
            if let Some(key) = candidates.iter().find(|k| env_name(k) == *name) {
                raw.insert(key.clone(), value.clone());
            }
        }
        for (k, v) in overrides {
            raw.insert(k.clone(), v.clone());
        }
        Self::from_map(raw, base_dir)
    }

    pub fn load(
        path: Option<&Path>,
        env: &[(String, String)],
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let (file, base) = match path {
            Some(p) => {
                if !p.exists() {
                    return Err(Error::MissingFile(p.to_path_buf()));
                }
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (parse_kv(&text)?, base)
            }
            None => (BTreeMap::new(), PathBuf::new()),
        };
        Self::from_sources(file, env, overrides, &base)
    }

    fn from_map(raw: BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let get = |k: &str| raw.get(k).map(String::as_str);
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() || base.as_os_str().is_empty() {
                p
            } else {
                base.join(p)
            }
        };

        let mut inputs: BTreeMap<String, InputSpec> = BTreeMap::new();
        let mut factor_keys: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in &raw {
            if let Some(rest) = k.strip_prefix("input.") {
                let (name, field) = rest
                    .rsplit_once('.')
                    .ok_or_else(|| Error::Config(format!("bad input key `{k}`")))?;
                let entry = inputs.entry(name.to_string()).or_insert_with(|| InputSpec {
                    name: name.to_string(),
                    path: PathBuf::new(),
                    schema: CsvSchema::default(),
                });
                match field {
                    "path" => entry.path = resolve(v),
                    "date_column" => entry.schema.date_column = v.clone(),
                    "columns" => entry.schema.value_columns = Some(list(v)),
                    "date_format" => entry.schema.date_format = v.clone(),
                    "delimiter" => {
                        let d = match v.as_str() {
                            "tab" | "\\t" => b'\t',
                            s if s.len() == 1 => s.as_bytes()[0],
                            _ => return Err(Error::Config(format!("`{k}`: delimiter must be one character"))),
                        };
                        entry.schema.delimiter = d;
                    }
                    _ => return Err(Error::Config(format!("unknown input field `{k}`"))),
                }
            } else if let Some(rest) = k.strip_prefix("factor.") {
                factor_keys.insert(rest.to_string(), v.clone());
            }
        }
        for i in inputs.values() {
            if i.path.as_os_str().is_empty() {
                return Err(Error::Config(format!("input `{}` has no path", i.name)));
            }
        }

        let rate_divisor = get("rate_divisor").map(|v| num("rate_divisor", v)).transpose()?.unwrap_or(DEFAULT_RATE_DIVISOR);
        let return_kind = match get("returns").unwrap_or("log") {
            "log" => ReturnKind::Log,
            "simple" => ReturnKind::Simple,
            other => return Err(Error::Config(format!("`returns`: expected log|simple, got `{other}`"))),
        };

        // factor.<ID> = recipe: in1, in2   and   factor.<ID>.<param> = value
        let mut factors = Vec::new();
        for (id, def) in factor_keys.iter().filter(|(k, _)| !k.contains('.')) {
            let (recipe, args) = def
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("factor `{id}`: expected `recipe: inputs`")))?;
            let recipe = recipe.trim();
            let args = list(args);
            if recipe == "raw" {
                let [column] = args.as_slice() else {
                    return Err(Error::Config(format!("factor `{id}`: raw takes one column")));
                };
                factors.push(FactorSource::Raw {
                    id: id.clone(),
                    column: column.clone(),
                });
                continue;
            }
            let mut params = FactorParams {
                return_kind,
                rate_divisor,
                ..FactorParams::default()
            };
            let pkey = |p: &str| format!("{id}.{p}");
            if let Some(v) = factor_keys.get(&pkey("window_k")) {
                params.ui_window = num(&pkey("window_k"), v)?;
            }
            if let Some(v) = factor_keys.get(&pkey("transform")) {
                params.vix = match v.as_str() {
                    "log_diff" => VixTransform::LogDiff,
                    "diff" => VixTransform::Diff,
                    "level" => VixTransform::Level,
                    other => return Err(Error::Config(format!("factor `{id}`: unknown transform `{other}`"))),
                };
            }
            if let Some(v) = factor_keys.get(&pkey("log")) {
                params.log_spread = boolean(&pkey("log"), v)?;
            }
            if let Some(v) = factor_keys.get(&pkey("demean")) {
                params.demean = boolean(&pkey("demean"), v)?;
            }
            for k in factor_keys.keys().filter(|k| k.starts_with(&format!("{id}."))) {
                let p = &k[id.len() + 1..];
                if !matches!(p, "window_k" | "transform" | "log" | "demean") {
                    return Err(Error::Config(format!("factor `{id}`: unknown parameter `{p}`")));
                }
            }
            factors.push(FactorSource::Built(FactorSpec {
                id: id.clone(),
                recipe: Recipe::parse(recipe)?,
                inputs: args,
                params,
            }));
        }

        let policy = CalendarPolicy {
            join_mode: match get("join").unwrap_or("intersection") {
                "intersection" => JoinMode::Intersection,
                "forward_fill" | "union_with_forward_fill" => JoinMode::UnionWithForwardFill,
                other => return Err(Error::Config(format!("`join`: unknown mode `{other}`"))),
            },
            max_fill_gap: get("max_fill_gap").map(|v| num("max_fill_gap", v)).transpose()?.unwrap_or(3),
        };

        let levels = match get("levels") {
            Some(v) => list(v).iter().map(|s| num::<f64>("levels", s)).collect::<Result<Vec<_>>>()?,
            None => vec![0.05, 0.10],
        };
        if levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::Config("`levels` must lie in (0,1)".into()));
        }

        let threads = get("threads").map(|v| num::<usize>("threads", v)).transpose()?;
        if threads == Some(0) {
            return Err(Error::Config("`threads` must be at least 1".into()));
        }
        let opt_num = |k: &str| get(k).map(|v| num::<usize>(k, v)).transpose();

        let sim = SimSettings {
            n: opt_num("sim.n")?,
            m: opt_num("sim.m")?,
            t: opt_num("sim.t")?,
            reps: opt_num("sim.reps")?.unwrap_or(0),
            alpha_scale: get("sim.alpha_scale").map(|v| num("sim.alpha_scale", v)).transpose()?.unwrap_or(0.0),
            innovations: match get("sim.innovations").unwrap_or("gaussian") {
                "gaussian" => Innovations::Gaussian,
                s if s.starts_with("t:") => Innovations::StudentT {
                    df: num("sim.innovations", &s[2..])?,
                },
                other => return Err(Error::Config(format!("`sim.innovations`: expected gaussian|t:<df>, got `{other}`"))),
            },
            structure_seed: get("sim.structure_seed").map(|v| num("sim.structure_seed", v)).transpose()?,
            write_panel: get("sim.write_panel").map(|v| boolean("sim.write_panel", v)).transpose()?.unwrap_or(true),
        };

        Ok(Self {
            inputs: inputs.into_values().collect(),
            assets: get("assets").map(list).unwrap_or_default(),
            asset_input: match get("assets.input").unwrap_or("levels") {
                "levels" => AssetInput::Levels,
                "returns" => AssetInput::Returns,
                other => return Err(Error::Config(format!("`assets.input`: expected levels|returns, got `{other}`"))),
            },
            return_kind,
            risk_free: get("risk_free").map(String::from),
            rate_divisor,
            factors,
            policy,
            panel: get("panel").map(resolve),
            window: opt_num("window")?.unwrap_or(DEFAULT_WINDOW),
            step: opt_num("step")?.unwrap_or(1),
            threads,
            out: get("out").map(resolve).unwrap_or_else(|| resolve("out")),
            seed: get("seed").map(|v| num("seed", v)).transpose()?.unwrap_or(42),
            levels,
            adf_max_lag: opt_num("adf.max_lag")?,
            adf_deterministic: match get("adf.deterministic").unwrap_or("constant") {
                "none" => Deterministic::None,
                "constant" => Deterministic::Constant,
                "constant_trend" => Deterministic::ConstantTrend,
                other => return Err(Error::Config(format!("`adf.deterministic`: unknown `{other}`"))),
            },
            shanken: get("shanken").map(|v| boolean("shanken", v)).transpose()?.unwrap_or(false),
            cs_intercept: get("cs_intercept").map(|v| boolean("cs_intercept", v)).transpose()?.unwrap_or(false),
            json: get("json").map(|v| boolean("json", v)).transpose()?.unwrap_or(false),
            sim,
            raw,
        })
    }

    /// Every referenced input file must exist.
    pub fn check_files(&self) -> Result<()> {
        for i in &self.inputs {
            if !i.path.exists() {
                return Err(Error::MissingFile(i.path.clone()));
            }
        }
        if let Some(p) = &self.panel {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()));
            }
        }
        Ok(())
    }
}
