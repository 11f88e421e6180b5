use apt_roll::fmb::{first_pass_matrices, second_pass, FirstPassFit};
use apt_roll::grs::grs_statistic;
use apt_roll::panel::{align, excess, to_returns, AlignedPanel, CalendarPolicy, RawSeries, ReturnKind, TaggedSeries};
use apt_roll::rolling::{plan_windows, roll, RollOptions};
use apt_roll::simkit::{business_days, simulate, DgpSpec};
use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal(rng: &mut ChaCha8Rng, r: usize, c: usize, s: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| s * rng.sample::<f64, _>(StandardNormal))
}

fn panel_data(seed: u64, t: usize, n: usize, m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = normal(&mut rng, t, m, 0.01);
    let b = normal(&mut rng, n, m, 1.0);
    let mut r = &f * b.transpose() + normal(&mut rng, t, n, 0.02);
    for mut row in r.row_iter_mut() {
        row.add_scalar_mut(5e-4);
    }
    (r, f)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn series_with_gaps(seed: u64, id: &str) -> RawSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = business_days(NaiveDate::from_ymd_opt(2010, 1, 4).unwrap(), 80);
    let dates: Vec<NaiveDate> = all.into_iter().filter(|_| rng.random_bool(0.85)).collect();
    let values = dates.iter().map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    RawSeries::new(id, dates, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn align_is_idempotent(seed in any::<u64>(), fill in any::<bool>()) {
        let tagged = vec![
            TaggedSeries::asset(series_with_gaps(seed, "A")),
            TaggedSeries::asset(series_with_gaps(seed ^ 1, "B")),
            TaggedSeries::factor(series_with_gaps(seed ^ 2, "F")),
        ];
        let policy = if fill { CalendarPolicy::forward_fill(5) } else { CalendarPolicy::intersection() };
        if let Ok((panel, _)) = align(&tagged, policy) {
            let (again, _) = align(&panel.to_series(), policy).unwrap();
            prop_assert_eq!(again, panel);
        }
    }

    #[test]
    fn log_returns_ignore_level_scale(seed in any::<u64>(), c in 1e-4f64..1e4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dates = business_days(NaiveDate::from_ymd_opt(2015, 6, 1).unwrap(), 40);
        let levels: Vec<f64> = (0..40).map(|_| rng.random_range(10.0..200.0)).collect();
        let s = RawSeries::new("P", dates, levels).unwrap();
        let a = to_returns(&s, ReturnKind::Log).unwrap();
        let b = to_returns(&s.map_values("P", |v| c * v).unwrap(), ReturnKind::Log).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn excess_with_zero_rate_is_identity(seed in any::<u64>()) {
        let (r, _) = panel_data(seed, 30, 4, 1);
        let rf: Vec<f64> = (0..30).map(|i| 1e-5 * i as f64).collect();
        let once = excess(&r, &rf).unwrap();
        prop_assert_eq!(excess(&once, &vec![0.0; 30]).unwrap(), once);
    }

    #[test]
    fn residuals_are_orthogonal(seed in any::<u64>()) {
        let (r, f) = panel_data(seed, 90, 5, 3);
        let fit = first_pass_matrices(&r, &f).unwrap();
        prop_assert!(f.tr_mul(&fit.residuals).amax() < 1e-14);
        for c in fit.residuals.column_iter() {
            prop_assert!(c.sum().abs() < 1e-14);
        }
    }

    #[test]
    fn exact_premium_recovery_for_any_weight(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, m) = (12, 3);
        let beta = normal(&mut rng, n, m, 1.0);
        let a = normal(&mut rng, n, n, 1.0);
        let lambda = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let fit = FirstPassFit {
            alpha: DVector::zeros(n),
            beta: beta.clone(),
            residuals: DMatrix::zeros(80, n),
            sigma_hat: &a * a.transpose() + DMatrix::identity(n, n) * 0.05,
            factor_mean: DVector::zeros(m),
            factor_cov: DMatrix::identity(m, m),
        };
        let mean = &beta * &lambda;
        let est = second_pass(&fit, mean.as_slice()).unwrap();
        for j in 0..m {
            prop_assert!(close(est.lambda[j], lambda[j], 1e-10));
        }
    }

    #[test]
    fn scaling_returns_scales_alpha_only(seed in any::<u64>(), c in 0.01f64..100.0) {
        let (r, f) = panel_data(seed, 150, 8, 2);
        let base = first_pass_matrices(&r, &f).unwrap();
        let scaled = first_pass_matrices(&(&r * c), &f).unwrap();
        for i in 0..8 {
            prop_assert!(close(scaled.alpha[i], c * base.alpha[i], 1e-9));
        }
        let mean = |x: &DMatrix<f64>| x.row_mean().iter().copied().collect::<Vec<f64>>();
        let l0 = second_pass(&base, &mean(&r)).unwrap();
        let l1 = second_pass(&scaled, &mean(&(&r * c))).unwrap();
        for j in 0..2 {
            prop_assert!(close(l1.lambda[j], l0.lambda[j], 1e-9));
            prop_assert!(close(l1.robust_se[j], l0.robust_se[j], 1e-9));
        }
    }

    #[test]
    fn scaling_returns_and_factors_scales_premia(seed in any::<u64>(), c in 0.01f64..100.0) {
        let (r, f) = panel_data(seed, 150, 8, 2);
        let mean = |x: &DMatrix<f64>| x.row_mean().iter().copied().collect::<Vec<f64>>();
        let base = first_pass_matrices(&r, &f).unwrap();
        let (rc, fc) = (&r * c, &f * c);
        let scaled = first_pass_matrices(&rc, &fc).unwrap();
        let l0 = second_pass(&base, &mean(&r)).unwrap();
        let l1 = second_pass(&scaled, &mean(&rc)).unwrap();
        for j in 0..2 {
            prop_assert!(close(l1.lambda[j], c * l0.lambda[j], 1e-9));
            prop_assert!(close(l1.robust_se[j], c * l0.robust_se[j], 1e-9));
        }
        for i in 0..8 {
            prop_assert!(close(scaled.alpha[i], c * base.alpha[i], 1e-9));
        }
    }

    #[test]
    fn grs_is_a_valid_test_statistic(seed in any::<u64>()) {
        let (r, f) = panel_data(seed, 100, 7, 2);
        let g = grs_statistic(&first_pass_matrices(&r, &f).unwrap()).unwrap();
        prop_assert!(g.statistic > 0.0);
        prop_assert!((0.0..=1.0).contains(&g.p_value));
        prop_assert_eq!((g.df1, g.df2), (7, 100 - 7 - 2));
        prop_assert_eq!(g.rejects_at(0.05), g.statistic > g.crit_5pct);
    }

    #[test]
    fn constructed_panel_respects_m_below_n(n in 1usize..6, m in 1usize..6) {
        let t = 20;
        let dates = business_days(NaiveDate::from_ymd_opt(2012, 3, 1).unwrap(), t);
        let ids = |p: &str, k: usize| (0..k).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let built = AlignedPanel::new(dates, DMatrix::zeros(t, n), ids("A", n), DMatrix::zeros(t, m), ids("F", m));
        prop_assert_eq!(built.is_ok(), m < n);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rolling_is_schedule_independent(seed in any::<u64>(), threads in 1usize..9, step in 1usize..6) {
        let panel = simulate(&DgpSpec::random(6, 2, 160, 3).with_seed(seed)).unwrap();
        let plan = plan_windows(panel.len(), 80, step).unwrap();
        let serial = roll(&panel, &plan, RollOptions { threads: Some(1), ..Default::default() }).unwrap();
        let parallel = roll(&panel, &plan, RollOptions { threads: Some(threads), ..Default::default() }).unwrap();
        prop_assert_eq!(serial, parallel);
    }
}
