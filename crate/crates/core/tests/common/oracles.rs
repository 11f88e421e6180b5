#![allow(dead_code)]

//! Reference implementations that share no code with the library.

/// `ln Gamma(x)` for `x > 0` via recurrence up to 15 and the Stirling series.
pub fn ln_gamma_stirling(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 15.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

pub fn f_density(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_b = ln_gamma_stirling(d1 / 2.0) + ln_gamma_stirling(d2 / 2.0) - ln_gamma_stirling((d1 + d2) / 2.0);
    let ln = 0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln()
        - 0.5 * (d1 + d2) * (1.0 + d1 * x / d2).ln()
        - ln_b;
    ln.exp()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, eps, 50)
}

/// `P(F > x)` by integrating the density over `[x, inf)` after the
/// substitution `t = x + s / (1 - s)`.
pub fn f_upper_tail_quadrature(x: f64, d1: f64, d2: f64) -> f64 {
    let g = |s: f64| {
        if s >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - s;
        f_density(x + s / u, d1, d2) / (u * u)
    };
    // split where the mass concentrates for a tighter adaptive fit
    let cuts = [0.0, 0.05, 0.2, 0.5, 0.8, 0.95, 1.0];
    cuts.windows(2).map(|c| integrate(&g, c[0], c[1], 1e-13)).sum()
}

/// Dickey-Fuller t-statistic from the closed-form regression of `dy_t` on
/// the deterministic terms and `y_{t-1}`, without augmentation lags.
/// `det`: 0 none, 1 constant, 2 constant and trend.
pub fn df_t_stat(y: &[f64], det: usize) -> f64 {
    let t = y.len() - 1;
    let k = det + 1;
    // normal equations, accumulated directly
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    let row = |i: usize| -> Vec<f64> {
        let mut r = Vec::with_capacity(k);
        if det >= 1 {
            r.push(1.0);
        }
        if det >= 2 {
            r.push((i + 1) as f64);
        }
        r.push(y[i]);
        r
    };
    for i in 0..t {
        let x = row(i);
        let dy = y[i + 1] - y[i];
        for a in 0..k {
            xty[a] += x[a] * dy;
            for b in 0..k {
                xtx[a][b] += x[a] * x[b];
            }
        }
    }
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let mut ssr = 0.0;
    for i in 0..t {
        let x = row(i);
        let fit: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
        ssr += (y[i + 1] - y[i] - fit).powi(2);
    }
    let s2 = ssr / (t - k) as f64;
    beta[k - 1] / (s2 * inv[k - 1][k - 1]).sqrt()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        assert!(d != 0.0, "singular matrix");
        for v in m[c].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    let pivot = m[c].clone();
                    for (v, p) in m[r].iter_mut().zip(pivot) {
                        *v -= f * p;
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}
