// Unit-root screening: levels versus returns, with BIC lag selection.

use apt_roll::stationarity::{adf_test, schwert_max_lag, Deterministic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn run_example() -> apt_roll::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = 1500;
    let shocks: Vec<f64> = (0..t).map(|_| 0.01 * rng.sample::<f64, _>(StandardNormal)).collect();

    let mut level = 4.6;
    let log_price: Vec<f64> = shocks.iter().map(|e| {
        level += 0.0002 + e;
        level
    }).collect();
    let mut prev = 0.0;
    let ar2: Vec<f64> = shocks.iter().scan(0.0, |p2, e| {
        let x = 0.5 * prev - 0.3 * *p2 + e;
        *p2 = prev;
        prev = x;
        Some(x)
    }).collect();

    let max_lag = schwert_max_lag(t);
    println!("max lag {max_lag}");
    for (name, series, det) in [
        ("log price", &log_price, Deterministic::ConstantTrend),
        ("returns", &shocks, Deterministic::Constant),
        ("AR(2)", &ar2, Deterministic::Constant),
    ] {
        let r = adf_test(series, max_lag, det)?;
        let [d1, d5, d10] = r.decisions();
        println!(
            "{name:<10} lag {:>2} stat {:>8.3} crit1 {:>7.3} p {}, reject 1/5/10%: {d1}/{d5}/{d10}",
            r.chosen_lag,
            r.statistic,
            r.critical[0],
            r.p_value_band.as_str()
        );
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
