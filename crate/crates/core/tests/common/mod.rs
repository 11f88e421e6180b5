#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use apt_roll::simkit::business_days;
use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const N_ASSETS: usize = 33;
pub const ROWS: usize = 700;

pub fn asset_names() -> Vec<String> {
    (1..=N_ASSETS).map(|i| format!("S{i:02}")).collect()
}

/// Writes `assets.csv` (comma) and `macro.csv` (semicolon) plus a config
/// defining nine factors, and returns the config path.
pub fn write_fixture(dir: &Path) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut z = move || rng.sample::<f64, _>(StandardNormal);
    let dates = business_days(NaiveDate::from_ymd_opt(2005, 1, 3).unwrap(), ROWS);

    let mut mkt = 1000.0f64;
    let mut levels = vec![100.0f64; N_ASSETS];
    let mut assets = String::from("date");
    for name in asset_names() {
        write!(assets, ",{name}").unwrap();
    }
    assets.push('\n');

    let mut macro_ = String::from("Date;TOPIX;GENSAKI;FWD;SPOT;JGB10;CORP;FXF;FXS;CPI;VXJ;IPX;WORLD\n");
    let (mut spot, mut fxs, mut vxj, mut ipx) = (50.0f64, 110.0f64, 20.0f64, 95.0f64);
    let mut gensaki = 0.003f64;
    for (t, d) in dates.iter().enumerate() {
        let m_ret = 0.0003 + 0.01 * z();
        mkt *= m_ret.exp();
        write!(assets, "{d}").unwrap();
        for (i, p) in levels.iter_mut().enumerate() {
            let beta = 0.6 + 0.8 * (i as f64) / N_ASSETS as f64;
            *p *= (beta * m_ret + 0.012 * z()).exp();
            write!(assets, ",{p:.6}").unwrap();
        }
        assets.push('\n');
        gensaki = (gensaki + 0.00005 * z()).max(0.0005);
        spot *= (0.015 * z()).exp();
        fxs *= (0.006 * z()).exp();
        vxj = (vxj * (0.05 * z()).exp()).clamp(8.0, 80.0);
        ipx *= (0.0001 + 0.004 * z()).exp();
        writeln!(
            macro_,
            "{d};{mkt:.4};{gensaki:.6};{:.4};{spot:.4};{:.6};{:.6};{:.4};{fxs:.4};{:.7};{vxj:.3};{ipx:.4};{:.7}",
            spot * (1.002 + 0.001 * z()).max(0.5),
            gensaki + 0.01 + 0.0005 * z(),
            gensaki + 0.018 + 0.0008 * z(),
            fxs * (0.999 + 0.0005 * z()),
            0.0001 + 0.0002 * z() + if t % 20 == 0 { 0.0005 } else { 0.0 },
            0.0002 + 0.008 * z(),
        )
        .unwrap();
    }
    fs::write(dir.join("assets.csv"), assets).unwrap();
    fs::write(dir.join("macro.csv"), macro_).unwrap();

    let config = format!(
        "# fixture run
input.assets.path = assets.csv
input.macro.path = macro.csv
input.macro.delimiter = ;
input.macro.date_column = Date
assets = {}
risk_free = GENSAKI
factor.MKT = excess_return: TOPIX, GENSAKI
factor.CMD = forward_spread: FWD, SPOT
factor.UTS = yield_spread: JGB10, GENSAKI
factor.DEF = credit_spread: CORP, JGB10
factor.FX = forward_premium: FXF, FXS
factor.UI = unexpected_inflation: CPI, GENSAKI
factor.VIX = volatility_change: VXJ
factor.IP = index_return: IPX
factor.WLD = raw: WORLD
window = 500
step = 20
out = out
",
        asset_names().join(", ")
    );
    let path = dir.join("run.conf");
    fs::write(&path, config).unwrap();
    path
}

/// All files under `dir` with their bytes, sorted by relative path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
