//! Fisher F distribution via the regularized incomplete beta function.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_split(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with `y = 1 - x` supplied separately so callers can pass an
/// exactly computed complement.
fn beta_reg_split(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_cont_frac(a, b, x) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - ln_front.exp() * beta_cont_frac(b, a, y) / b).clamp(0.0, 1.0)
    }
}

/// Continued fraction for the incomplete beta, modified Lentz iteration.
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..20_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        // even step
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

fn check_df(df1: f64, df2: f64) -> Result<()> {
    if !(df1 >= 1.0 && df2 >= 1.0 && df1.is_finite() && df2.is_finite()) {
        return Err(Error::DegreesOfFreedom(format!(
            "F({df1}, {df2}) needs both degrees of freedom >= 1"
        )));
    }
    Ok(())
}

/// `P(X > x)` for `X ~ F(df1, df2)`.
pub fn f_upper_tail(x: f64, df1: f64, df2: f64) -> Result<f64> {
    check_df(df1, df2)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("F argument must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let scaled = df1 * x;
    let denom = df2 + scaled;
    // P(X > x) = I_{df2/(df2+df1 x)}(df2/2, df1/2)
    Ok(beta_reg_split(df2 / 2.0, df1 / 2.0, df2 / denom, scaled / denom))
}

/// `P(X <= x)` for `X ~ F(df1, df2)`.
pub fn f_cdf(x: f64, df1: f64, df2: f64) -> Result<f64> {
    check_df(df1, df2)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("F argument must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let scaled = df1 * x;
    let denom = df2 + scaled;
    Ok(beta_reg_split(df1 / 2.0, df2 / 2.0, scaled / denom, df2 / denom))
}

/// The `p` quantile of `F(df1, df2)`: the `x` with `P(X <= x) = p`.
///
/// Bisects on `u = df1 x / (df1 x + df2)`, where the CDF is `I_u(df1/2, df2/2)`,
/// until the bracket collapses to adjacent floats.
pub fn f_quantile(p: f64, df1: f64, df2: f64) -> Result<f64> {
    check_df(df1, df2)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("probability must be in (0,1), got {p}")));
    }
    let (a, b) = (df1 / 2.0, df2 / 2.0);
    // work in whichever tail keeps the target away from 1
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    let tail = |u: f64| {
        if upper {
            beta_reg_split(b, a, 1.0 - u, u)
        } else {
            beta_reg_split(a, b, u, 1.0 - u)
        }
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = tail(mid);
        let below = if upper { v > target } else { v < target };
        if below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    let achieved = tail(u);
    if (achieved - target).abs() > 1e-9 * target.max(1e-3) && (hi - lo) > f64::EPSILON {
        return Err(Error::NoConvergence(format!(
            "F({df1}, {df2}) quantile at p={p}: residual {}",
            achieved - target
        )));
    }
    if u >= 1.0 {
        return Err(Error::NoConvergence(format!(
            "F({df1}, {df2}) quantile at p={p} overflows"
        )));
    }
    Ok(df2 * u / (df1 * (1.0 - u)))
}
