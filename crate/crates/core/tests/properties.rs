use henon_core::config::KvConfig;
use henon_core::export::fmt17;
use henon_core::integrator::{EventKind, Termination};
use henon_core::problem::{
    barrier_c, barrier_xi, critical_exponent, critical_exponent_exact, log_grid,
};
use henon_core::shooting::scan;
use henon_core::{integrate, HenonSpec, IntegratorOptions, ProblemSpec};
use num_rational::Ratio;
use proptest::prelude::*;

fn spec_strategy() -> impl Strategy<Value = HenonSpec> {
    (3u32..=10, 0.5f64..20.0, 1.5f64..20.0).prop_map(|(n, a, p)| HenonSpec::new(n, a, p).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn barrier_is_decreasing_with_unit_anchor(spec in spec_strategy(), r in 1e-3f64..10.0, k in 1.01f64..4.0) {
        prop_assert!((barrier_c(&spec, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let a = barrier_c(&spec, r).unwrap();
        let b = barrier_c(&spec, r * k).unwrap();
        prop_assert!(b < a);
        prop_assert!(barrier_c(&spec, -r).is_err());
    }

    #[test]
    fn xi_matches_power_barrier(spec in spec_strategy(), r in 1e-2f64..10.0) {
        let c = barrier_c(&spec, r).unwrap();
        let xi = barrier_xi(&spec.as_general(), r).unwrap();
        prop_assert!((xi - c).abs() <= 1e-9 * c, "xi {} vs c {}", xi, c);
    }

    #[test]
    fn fmt17_round_trips(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let back: f64 = fmt17(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }

    #[test]
    fn config_round_trips(spec in spec_strategy()) {
        let spec: ProblemSpec = spec.into();
        let text = spec.to_config().unwrap().to_text();
        let back = ProblemSpec::from_config(&KvConfig::parse(&text).unwrap()).unwrap();
        prop_assert_eq!(back.henon(), spec.henon());
    }

    #[test]
    fn critical_exponent_exact_agrees(n in 3u32..40, num in 0i64..400, den in 1i64..12) {
        let exact = critical_exponent_exact(n, Ratio::new(num, den)).unwrap();
        let float = critical_exponent(n, num as f64 / den as f64).unwrap();
        let approx = *exact.numer() as f64 / *exact.denom() as f64;
        prop_assert!((approx - float).abs() <= 1e-12 * float.max(1.0));
    }

    #[test]
    fn log_grid_is_increasing(lo in 1e-4f64..1.0, span in 1.5f64..1e6, points in 2usize..200) {
        let g = log_grid(lo, lo * span, points);
        prop_assert_eq!(g.len(), points);
        prop_assert!((g[0] - lo).abs() <= 1e-12 * lo);
        prop_assert!((g[points - 1] - lo * span).abs() <= 1e-9 * lo * span);
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectory_invariants(spec in spec_strategy(), log_g in -2.0f64..3.0) {
        let gamma = 10f64.powf(log_g);
        let spec: ProblemSpec = spec.into();
        let traj = integrate(&spec, gamma, 3.0, &IntegratorOptions::default());
        prop_assert!(traj.nodes.windows(2).all(|w| w[1].r > w[0].r));
        let interior = match traj.termination {
            Termination::PositivityLoss => &traj.nodes[..traj.nodes.len() - 1],
            _ => &traj.nodes[..],
        };
        prop_assert!(interior.iter().all(|n| n.u > 0.0));
        prop_assert!(traj.stationary_radii().windows(2).all(|w| w[1] > w[0]));
        if let Some(r1) = traj.nth_stationary(1) {
            let crossing = traj.events_of(EventKind::BarrierCrossing).next().map(|e| e.r);
            prop_assert!(crossing.is_some_and(|c| c <= r1 + 1e-9), "crossing {:?} vs R1 {}", crossing, r1);
            prop_assert!(traj.nodes.iter().filter(|n| n.r < r1).all(|n| n.v >= 0.0));
        }
    }

    #[test]
    fn scan_is_ordered(spec in spec_strategy(), points in 2usize..12) {
        let s = scan(&spec.into(), 1e-2, 1e2, points, 2.0, &IntegratorOptions::default()).unwrap();
        prop_assert_eq!(s.records.len(), points);
        prop_assert!(s.gammas.windows(2).all(|w| w[1] > w[0]));
        for (g, rec) in s.gammas.iter().zip(&s.records) {
            prop_assert_eq!(*g, rec.gamma);
            prop_assert!(rec.stationary.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
