// Cross-sectional GLS risk premia with robust and Shanken-corrected
// standard errors, plus the intercept diagnostic.

use apt_roll::fmb::{first_pass, second_pass_with, SecondPassOptions};
use apt_roll::simkit::{simulate, DgpSpec};

pub fn run_example() -> apt_roll::Result<()> {
    let spec = DgpSpec::random(25, 4, 3000, 5).with_seed(21);
    let panel = simulate(&spec)?;
    let fit = first_pass(&panel)?;
    let weight = fit.sigma_factor()?;
    let mean = panel.mean_excess();

    let plain = second_pass_with(&fit, &weight, &mean, SecondPassOptions::default())?;
    let shanken = second_pass_with(&fit, &weight, &mean, SecondPassOptions { shanken: true, intercept: false })?;
    println!("{:<4} {:>11} {:>11} {:>10} {:>10} {:>11}", "", "lambda", "true", "se", "se (EIV)", "mean f");
    for j in 0..spec.m {
        println!(
            "{:<4} {:>11.3e} {:>11.3e} {:>10.2e} {:>10.2e} {:>11.3e}",
            panel.factor_ids()[j],
            plain.lambda[j],
            spec.lambda_true[j],
            plain.robust_se[j],
            shanken.robust_se[j],
            plain.expected_premium[j]
        );
    }

    let diag = second_pass_with(&fit, &weight, &mean, SecondPassOptions { shanken: false, intercept: true })?;
    if let Some((c, se)) = diag.intercept {
        println!("cross-sectional intercept {c:.3e} (se {se:.2e})");
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
