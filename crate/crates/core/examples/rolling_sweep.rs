// Rolling-window GRS and premium estimates on a desk-sized panel, written
// as plot-ready CSV.
//
// ```text
// cargo run --release --example rolling_sweep -- /tmp/sweep
// ```

use std::fs::File;
use std::path::PathBuf;

use apt_roll::rolling::{plan_windows, premium_correlation, roll, RollOptions};
use apt_roll::simkit::{simulate, DgpSpec};

pub fn run_example() -> apt_roll::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("apt_roll_sweep"));
    std::fs::create_dir_all(&out).map_err(|e| apt_roll::Error::Config(e.to_string()))?;

    let spec = DgpSpec::random(15, 3, 1500, 8).with_seed(2);
    let panel = simulate(&spec)?;
    let plan = plan_windows(panel.len(), 500, 5)?;
    let series = roll(&panel, &plan, RollOptions::default())?;

    let grs = series.grs();
    let rejected = grs.iter().flatten().filter(|g| g.rejects_at(0.05)).count();
    println!("{} windows, {} reject at 5%, {} flagged", series.len(), rejected, series.flagged_count());
    let first = &series.windows[0];
    println!("first window rows {}..{} stamped {}", first.start, first.end, first.date);
    let band = series.ci_95(0);
    if let Some((lo, hi)) = band.last().copied().flatten() {
        println!("last 95% band for F1: [{lo:.2e}, {hi:.2e}]");
    }
    println!("corr(F1, F2) of rolling premia: {:.3}", premium_correlation(&series, "F1", "F2")?);

    let io = |e: std::io::Error| apt_roll::Error::Config(e.to_string());
    series.write_grs_csv(File::create(out.join("rolling_grs.csv")).map_err(io)?)?;
    series.write_premium_csv(File::create(out.join("rolling_premiums.csv")).map_err(io)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
