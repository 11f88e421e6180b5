#[path = "common/oracles.rs"]
mod oracles;

use apt_roll::stationarity::{adf_fixed_lag, critical_values, Deterministic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_walk(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(len);
    let mut level = 0.0;
    for _ in 0..len {
        level += rng.sample::<f64, _>(StandardNormal);
        y.push(level);
    }
    y
}

const CASES: [(Deterministic, usize); 3] = [
    (Deterministic::None, 0),
    (Deterministic::Constant, 1),
    (Deterministic::ConstantTrend, 2),
];

#[test]
fn statistic_matches_closed_form_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (det, code) in CASES {
        for _ in 0..20 {
            let y = random_walk(&mut rng, 250);
            let lib = adf_fixed_lag(&y, 0, det).unwrap().statistic;
            let oracle = oracles::df_t_stat(&y, code);
            assert!((lib - oracle).abs() < 1e-9 * oracle.abs().max(1.0), "{det:?}: {lib} vs {oracle}");
        }
    }
}

/// Empirical Dickey-Fuller quantiles from 50k random walks per sample size.
#[test]
fn response_surface_matches_simulated_quantiles() {
    let reps = 50_000;
    for (det, code) in CASES {
        for t in [100usize, 500, 1000] {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + t as u64 + code as u64);
            let mut stats: Vec<f64> = (0..reps)
                .map(|_| oracles::df_t_stat(&random_walk(&mut rng, t + 1), code))
                .collect();
            stats.sort_by(f64::total_cmp);
            let cv = critical_values(det, t);
            for (k, p) in [0.01, 0.05, 0.10].into_iter().enumerate() {
                let emp = stats[(p * reps as f64) as usize];
                // quantile standard error is at most about 0.02 here
                assert!((emp - cv[k]).abs() < 0.06, "{det:?} T={t} p={p}: simulated {emp}, surface {}", cv[k]);
            }
        }
    }
}
