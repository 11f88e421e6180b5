// F distribution tails and quantiles from the regularized incomplete beta.

use apt_roll::grs::{f_cdf, f_quantile, f_upper_tail};

pub fn run_example() -> apt_roll::Result<()> {
    println!("{:>4} {:>6} {:>10} {:>10}", "df1", "df2", "F(0.95)", "F(0.90)");
    for (d1, d2) in [(1.0, 50.0), (5.0, 458.0), (33.0, 458.0), (33.0, 5000.0)] {
        println!(
            "{d1:>4} {d2:>6} {:>10.5} {:>10.5}",
            f_quantile(0.95, d1, d2)?,
            f_quantile(0.90, d1, d2)?
        );
    }
    let x = 0.5617;
    let tail = f_upper_tail(x, 33.0, 458.0)?;
    println!("P(F(33, 458) > {x}) = {tail:.6}");
    println!("cdf + tail = {}", f_cdf(x, 33.0, 458.0)? + tail);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
