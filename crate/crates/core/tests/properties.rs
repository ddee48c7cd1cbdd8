mod common;

use amuse_core::optimizer::{daily_budget, solve_bruteforce, solve_lagrange, BudgetState, Network, Planner, FEAS_TOL};
use amuse_core::ratectl::{ControllerConfig, ControllerState};
use amuse_core::sim::synthetic::{cohort, CohortSpec};
use amuse_core::sim::{run_day, Algorithm, BudgetSpec, SimConfig, UserState};
use amuse_core::trace::{normalize_volume, App, AppKind, AppUsage, DayTrace, LocationId, PeriodRecord, RateGrid};
use amuse_core::usage::{adjust_for_deferrals, forecast_usage, AdjustPolicy, Deferral, ObservedUsage};
use amuse_core::utility::{choice_value, default_params, utility, UtilityContext};
use amuse_core::wifi::{fit_profile, initial_forecast, update_forecast, WifiForecast};
use proptest::prelude::*;

fn app() -> impl Strategy<Value = App> {
    prop::sample::select(App::ALL.to_vec())
}

fn kind() -> impl Strategy<Value = AppKind> {
    prop::sample::select(vec![AppKind::FixedVolume, AppKind::FixedTime])
}

fn ctx(price: f64, delay: u32, rate: f64, size: f64) -> UtilityContext {
    UtilityContext { price, delay, rate, size }
}

proptest! {
    #[test]
    fn utility_falls_with_delay(a in app(), k in kind(), price in 0.0..0.1f64, rate in 0.05..1.0f64, size in 0.0..200.0f64, t in 0u32..30) {
        let p = default_params(a);
        let now = utility(&p, k, ctx(price, t, rate, size)).unwrap();
        let later = utility(&p, k, ctx(price, t + 1, rate, size)).unwrap();
        prop_assert!(later <= now);
    }

    #[test]
    fn fixed_volume_utility_rises_with_rate(a in app(), price in 0.0..0.1f64, r1 in 0.05..1.0f64, r2 in 0.05..1.0f64, size in 0.0..200.0f64) {
        let p = default_params(a);
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let u = |r| utility(&p, AppKind::FixedVolume, ctx(price, 0, r, size)).unwrap();
        prop_assert!(u(lo) <= u(hi));
    }

    #[test]
    fn utility_never_exceeds_priority(a in app(), k in kind(), price in 0.0..0.1f64, rate in 0.05..1.0f64, size in 0.0..200.0f64, t in 0u32..30) {
        let p = default_params(a);
        prop_assert!(utility(&p, k, ctx(price, t, rate, size)).unwrap() <= p.c + 1e-12);
    }

    #[test]
    fn expected_value_is_affine_in_wifi(a in app(), k in kind(), w in 0.0..=1.0f64, gamma in 0.05..1.0f64, size in 0.1..100.0f64, t in 0u32..10) {
        let p = default_params(a);
        let at = |w| choice_value(&p, k, t, gamma, w, size, 0.01).unwrap();
        let mixed = w * at(1.0) + (1.0 - w) * at(0.0);
        prop_assert!((at(w) - mixed).abs() <= 1e-12);
    }

    #[test]
    fn daily_budget_monotone_and_bounded(r1 in 0.0..100.0f64, r2 in 0.0..100.0f64, m in 1u32..31) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let (blo, bhi) = (daily_budget(lo, m).unwrap(), daily_budget(hi, m).unwrap());
        prop_assert!(blo <= bhi);
        prop_assert!(bhi <= hi + 1e-12);
        if m > 1 {
            prop_assert!(daily_budget(hi, m).unwrap() >= hi / f64::from(m) - 1e-12);
        }
    }

    #[test]
    fn spend_accounting_is_additive(daily in 0.0..10.0f64, spends in prop::collection::vec(0.0..1.0f64, 0..20)) {
        let mut s = BudgetState::start_day(daily * 5.0, 5).unwrap();
        for &x in &spends {
            s.record_spend(x);
        }
        let total: f64 = spends.iter().sum();
        prop_assert!((s.remaining_today() - (s.daily - total)).abs() <= 1e-9);
        prop_assert!((s.month_after_today() - (daily * 5.0 - total)).abs() <= 1e-9);
    }

    #[test]
    fn normalization_is_linear(bytes in 0.0..1e9f64, k in 0.0..8.0f64, speed in 1e3..1e8f64) {
        let one = normalize_volume(bytes, speed).unwrap();
        let scaled = normalize_volume(k * bytes, speed).unwrap();
        prop_assert!((scaled - k * one).abs() <= 1e-9 * (1.0 + scaled.abs()));
    }

    #[test]
    fn forecast_scales_with_history(
        days in prop::collection::vec(prop::collection::vec(0.0..50.0f64, 4), 1..6),
        factor in 0.0..5.0f64,
        window in 1usize..5,
    ) {
        let mut plain = ObservedUsage::new(4);
        let mut scaled = ObservedUsage::new(4);
        for (d, cells) in days.iter().enumerate() {
            for (k, &x) in cells.iter().enumerate() {
                plain.record_usage(d as u32, k, App::Browsing, x).unwrap();
                scaled.record_usage(d as u32, k, App::Browsing, factor * x).unwrap();
            }
        }
        let (a, b) = (forecast_usage(&plain, window).unwrap(), forecast_usage(&scaled, window).unwrap());
        for k in 0..4 {
            let (x, y) = (a.get(k, App::Browsing), b.get(k, App::Browsing));
            prop_assert!((y - factor * x).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn adjustment_preserves_totals(
        n in 2usize..12,
        seed in any::<u64>(),
        policy_threshold in prop::option::of(0.1..2.0f64),
    ) {
        use rand::Rng;
        let mut r = common::rng(seed);
        let mut cells = || -> Vec<AppUsage> {
            (0..n).map(|_| AppUsage(std::array::from_fn(|_| if r.random::<bool>() { 0.0 } else { 20.0 * r.random::<f64>() }))).collect()
        };
        let sigma = cells();
        let forecast = cells();
        let deferrals: Vec<Deferral> = (0..r.random_range(0..8))
            .map(|_| {
                let from = r.random_range(0..n - 1);
                Deferral { app: App::ALL[r.random_range(0..App::COUNT)], from, to: r.random_range(from + 1..n) }
            })
            .collect();
        let policy = policy_threshold.map_or(AdjustPolicy::Always, AdjustPolicy::BelowFraction);
        let out = adjust_for_deferrals(&sigma, &forecast, &deferrals, policy).unwrap();
        prop_assert_eq!(out.clamped, 0);
        for a in App::ALL {
            let before: f64 = sigma.iter().map(|u| u[a]).sum();
            let after: f64 = out.sigma.iter().map(|u| u[a]).sum();
            prop_assert!((before - after).abs() <= 1e-9);
        }
    }

    #[test]
    fn wifi_probabilities_stay_in_unit_interval(seed in any::<u64>(), places in 1usize..5, days in 1usize..6) {
        use rand::Rng;
        let mut r = common::rng(seed);
        let mut random_day = |idx: u32| DayTrace {
            day_index: idx,
            periods: (0..8)
                .map(|_| {
                    let l = r.random_range(0..=places);
                    PeriodRecord {
                        location: (l < places).then(|| LocationId::new(format!("l{l}"))),
                        wifi_available: l < places && r.random::<bool>(),
                        ..Default::default()
                    }
                })
                .collect(),
        };
        let training: Vec<DayTrace> = (0..days as u32).map(&mut random_day).collect();
        let probe = random_day(100);
        let (profile, history) = fit_profile(&training).unwrap();
        let mut all = initial_forecast(&profile, &history).unwrap().w;
        for i in 1..8 {
            let prev2 = (i >= 2).then(|| &probe.periods[i - 2].location);
            all.extend(update_forecast(&profile, &history, i, prev2, &probe.periods[i - 1].location).unwrap().w);
        }
        prop_assert!(all.iter().all(|w| (0.0..=1.0).contains(w)));
    }

    #[test]
    fn heuristic_result_is_honest_and_bounded(seed in any::<u64>(), lo in 0.1..0.8f64, spread in 0.1..1.0f64) {
        let p = common::random_mmkp(seed, (lo, lo + spread));
        let s = solve_lagrange(&p, None);
        let loads = p.loads(&s.assignment);
        let really = loads.iter().zip(&p.rows).all(|(l, r)| *l <= r.bound + FEAS_TOL);
        prop_assert_eq!(s.feasible, really);
        prop_assert!((s.objective - p.objective(&s.assignment)).abs() <= 1e-12);
        if let Ok(exact) = solve_bruteforce(&p) {
            prop_assert!(s.feasible);
            prop_assert!(s.objective <= exact.objective + 1e-9);
        }
    }

    #[test]
    fn feasible_warm_start_is_never_worsened(seed in any::<u64>()) {
        let p = common::random_mmkp(seed, (0.5, 1.5));
        if let Ok(exact) = solve_bruteforce(&p) {
            let s = solve_lagrange(&p, Some(&exact.assignment));
            prop_assert!(s.stats.warm_start_used);
            prop_assert!(s.objective >= exact.objective - 1e-12);
        }
    }

    #[test]
    fn planned_problems_are_well_formed(seed in any::<u64>(), n in 2usize..6, budget in 0.0..2.0f64) {
        use rand::Rng;
        let mut r = common::rng(seed);
        let planner = Planner::new(n, RateGrid::default(), 0.01);
        let s: Vec<AppUsage> = (0..n).map(|_| AppUsage(std::array::from_fn(|_| if r.random::<f64>() < 0.7 { 0.0 } else { 30.0 * r.random::<f64>() }))).collect();
        let demand = amuse_core::usage::DemandForecast { s, window: 3 };
        let wifi = WifiForecast::fixed((0..n).map(|_| r.random::<f64>()).collect());
        let mut p = planner.build_mmkp(&demand, &wifi, budget, 0, &[]);
        prop_assert!(p.validate().is_ok());
        for g in &p.groups {
            for item in &g.items {
                let c = item.choice.unwrap();
                prop_assert!(c.target >= g.key.unwrap().origin && c.gamma > 0.0);
            }
        }
        let s = solve_lagrange(&p, None);
        if s.feasible {
            prop_assert!(s.loads[0] <= budget.max(0.0) + FEAS_TOL);
        }
    }

    #[test]
    fn window_stays_clamped(seed in any::<u64>(), alpha in 0.05..=1.0f64, target in 1e3..1e7f64) {
        use rand::Rng;
        let mut r = common::rng(seed);
        let cfg = ControllerConfig { alpha, ..ControllerConfig::default() };
        let mut c = ControllerState::new(target, cfg).unwrap();
        let mut now = 0.0;
        for _ in 0..300 {
            now += r.random_range(0.0..0.1);
            c.control_step(now, r.random_range(0.0..2e5));
            prop_assert!((cfg.min_adv_win..=cfg.rcv_buf_size).contains(&c.ack_stamp()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulated_days_conserve_volume_and_money(seed in 0u64..1000, pick in 0usize..3, strict in any::<bool>()) {
        let users = cohort(&CohortSpec { users: 1, days: 4, seed, ..Default::default() });
        let config = SimConfig { strict_budget: strict, budget: BudgetSpec::Fixed { amount: 20.0 }, ..Default::default() };
        let algorithm = Algorithm::ALL[pick];
        let days = &users[0].days;
        let mut state = UserState::train(&config, &days[..3], 20.0).unwrap();
        let out = run_day(&config, &mut state, &days[3], algorithm).unwrap();
        let demand = days[3].totals();
        for a in App::ALL {
            let executed: f64 = out.records.iter().filter(|r| r.app == a).map(|r| r.size).sum();
            prop_assert!((executed - demand[a]).abs() <= 1e-9 * (1.0 + demand[a]));
        }
        let cell_volume: f64 = out
            .records
            .iter()
            .filter(|r| r.network == Network::Cellular)
            .map(|r| r.volume(config.kinds.kind(r.app)))
            .sum();
        prop_assert!((out.summary.spend - config.price * cell_volume).abs() <= 1e-9);
        for r in &out.records {
            prop_assert!(r.executed >= r.origin);
            prop_assert_eq!(r.spend == 0.0, r.network == Network::Wifi);
        }
        prop_assert!(out.summary.offloaded <= out.summary.volume + 1e-9);
    }

    #[test]
    fn simulation_is_deterministic(seed in 0u64..1000) {
        let users = cohort(&CohortSpec { users: 1, days: 5, seed, ..Default::default() });
        let config = SimConfig { seed, ..Default::default() };
        let run = || amuse_core::sim::run_trial(&users, &config, &[Algorithm::Amuse]).unwrap();
        prop_assert_eq!(run(), run());
    }
}
