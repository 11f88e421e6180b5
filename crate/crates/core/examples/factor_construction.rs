// Building macro factors from raw dated series: excess market return,
// yield spread, commodity forward spread, unexpected inflation and
// volatility changes.

use std::collections::HashMap;

use apt_roll::factors::{build_factor, FactorSpec, Recipe, UiState};
use apt_roll::panel::RawSeries;
use apt_roll::simkit::business_days;
use chrono::NaiveDate;

pub fn run_example() -> apt_roll::Result<()> {
    let dates = business_days(NaiveDate::from_ymd_opt(2020, 1, 6).unwrap(), 120);
    let wave = |i: usize, amp: f64, period: f64| amp * (i as f64 * std::f64::consts::TAU / period).sin();
    let series = |id: &str, f: &dyn Fn(usize) -> f64| RawSeries::new(id, dates.clone(), (0..dates.len()).map(f).collect());

    let mut inputs = HashMap::new();
    for s in [
        series("TOPIX", &|i| 1800.0 * (1.0 + wave(i, 0.05, 40.0) + 0.0004 * i as f64))?,
        series("GENSAKI", &|i| 0.001 + wave(i, 0.0002, 60.0))?,
        series("JGB10", &|i| 0.006 + wave(i, 0.001, 90.0))?,
        series("OIL_FWD", &|i| 70.0 + wave(i, 3.0, 30.0) + 0.8)?,
        series("OIL_SPOT", &|i| 70.0 + wave(i, 3.0, 30.0))?,
        series("CPI", &|i| 0.0001 + wave(i, 0.00005, 20.0))?,
        series("VXJ", &|i| 22.0 + wave(i, 4.0, 25.0))?,
    ] {
        inputs.insert(s.id().to_string(), s);
    }

    let mut ui = FactorSpec::new("UI", Recipe::UnexpectedInflation, &["CPI", "GENSAKI"]);
    ui.params.ui_window = 20;
    let specs = [
        FactorSpec::new("MKT", Recipe::ExcessReturn, &["TOPIX", "GENSAKI"]),
        FactorSpec::new("UTS", Recipe::YieldSpread, &["JGB10", "GENSAKI"]),
        FactorSpec::new("CMD", Recipe::ForwardSpread, &["OIL_FWD", "OIL_SPOT"]),
        ui,
        FactorSpec::new("VIX", Recipe::VolatilityChange, &["VXJ"]),
    ];
    for spec in &specs {
        let f = build_factor(spec, &inputs)?;
        let mean = f.values().iter().sum::<f64>() / f.len() as f64;
        println!("{:<4} {:>3} obs from {}  mean {:+.3e}", f.id(), f.len(), f.dates()[0], mean);
    }

    // streaming use: feed one period at a time
    let mut state = UiState::new(3)?;
    for (infl, rf) in [(0.001, 0.0004), (0.0012, 0.0004), (0.0009, 0.0004), (0.002, 0.0004)] {
        match state.update(infl, rf) {
            Some(u) => println!("UI {u:+.5}"),
            None => println!("warming up"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
