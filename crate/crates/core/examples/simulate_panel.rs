// Draw a synthetic factor panel and compare sample moments with the truth.
//
// ```text
// cargo run --example simulate_panel
// ```

use apt_roll::simkit::{simulate, DgpSpec, Innovations};

pub fn run_example() -> apt_roll::Result<()> {
    let mut spec = DgpSpec::random(8, 2, 2500, 1).with_seed(7);
    spec.innovations = Innovations::StudentT { df: 5.0 };
    let panel = simulate(&spec)?;

    println!(
        "{} rows, assets {:?}, factors {:?}",
        panel.len(),
        panel.asset_ids(),
        panel.factor_ids()
    );
    println!("first date {}, last date {}", panel.dates()[0], panel.dates()[panel.len() - 1]);
    let t = panel.len() as f64;
    for (j, col) in panel.factor_matrix().column_iter().enumerate() {
        let mean = col.sum() / t;
        let sd = spec.factor_cov[(j, j)].sqrt();
        println!(
            "{}: sample mean {:+.6} vs lambda {:+.6} (sampling sd {:.6})",
            panel.factor_ids()[j],
            mean,
            spec.lambda_true[j],
            sd / t.sqrt()
        );
    }

    let again = simulate(&spec)?;
    println!("same seed reproduces the panel: {}", again == panel);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
