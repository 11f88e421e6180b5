// Time-series regressions and the GRS test of zero intercepts, under the
// null and with mispricing added to half of the assets.

use apt_roll::fmb::first_pass;
use apt_roll::grs::grs_statistic;
use apt_roll::simkit::{simulate, DgpSpec};

fn fmt_row<'a>(v: impl Iterator<Item = &'a f64>) -> String {
    v.map(|x| format!("{x:+.5}")).collect::<Vec<_>>().join(" ")
}

pub fn run_example() -> apt_roll::Result<()> {
    let spec = DgpSpec::random(10, 3, 1000, 3).with_seed(11);
    let fit = first_pass(&simulate(&spec)?)?;
    let grs = grs_statistic(&fit)?;
    println!(
        "null:       GRS {:.4} ~ F({}, {}), p {:.4}, 5% critical {:.4}",
        grs.statistic, grs.df1, grs.df2, grs.p_value, grs.crit_5pct
    );
    println!("loadings of asset 1: {}", fmt_row(fit.beta.row(0).iter()));

    let mut priced = spec.clone();
    for i in 0..5 {
        priced.alpha[i] = 1e-3;
    }
    let fit = first_pass(&simulate(&priced)?)?;
    let grs = grs_statistic(&fit)?;
    println!(
        "mispriced:  GRS {:.4}, p {:.2e}, rejects at 5%: {}",
        grs.statistic,
        grs.p_value,
        grs.rejects_at(0.05)
    );
    println!("estimated alphas: {}", fmt_row(fit.alpha.iter()));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
