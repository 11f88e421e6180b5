// Empirical size and power of the GRS test from repeated simulation.
//
// ```text
// cargo run --release --example monte_carlo_size_power -- 2000
// ```

use apt_roll::simkit::{mc_experiment, DgpSpec};

pub fn run_example() -> apt_roll::Result<()> {
    let reps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);
    let null = DgpSpec::random(10, 3, 500, 11).with_seed(1);
    let report = mc_experiment(&null, reps, 0.05, None)?;
    println!("size at 5%: {:.4} ({} reps)", report.rejection_rate, report.reps);

    let sd = report.alpha_sd();
    for k in [0.5, 1.0, 2.0, 3.0] {
        let mut spec = null.clone();
        spec.alpha = sd.iter().map(|s| k * s).collect();
        let r = mc_experiment(&spec, reps, 0.05, None)?;
        println!("alpha = {k:.1} x null sd: rejection {:.4}", r.rejection_rate);
    }

    println!("lambda bias / MC se:");
    for (j, (b, s)) in report.lambda_bias.iter().zip(&report.lambda_bias_se).enumerate() {
        println!("  F{} {:+.2}", j + 1, b / s);
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
