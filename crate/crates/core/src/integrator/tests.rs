use super::*;
use crate::problem::{HenonSpec, monotonicity_bound};

fn henon(n: u32, a: f64, p: f64) -> ProblemSpec {
    HenonSpec::new(n, a, p).unwrap().into()
}

/// Classical fixed-step RK4 from the series point; test-only oracle.
fn rk4_state(spec: &ProblemSpec, gamma: f64, r0: f64, r1: f64, steps: usize) -> (f64, f64) {
    let (mut u, mut v) = series_start(spec, gamma, r0);
    let h = (r1 - r0) / steps as f64;
    let mut r = r0;
    for _ in 0..steps {
        let k1 = spec.rhs(r, u, v);
        let k2 = spec.rhs(r + h / 2.0, u + h / 2.0 * k1[0], v + h / 2.0 * k1[1]);
        let k3 = spec.rhs(r + h / 2.0, u + h / 2.0 * k2[0], v + h / 2.0 * k2[1]);
        let k4 = spec.rhs(r + h, u + h * k3[0], v + h * k3[1]);
        u += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        v += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        r += h;
    }
    (u, v)
}

#[test]
fn series_second_derivative_at_origin() {
    let spec = henon(3, 3.0, 5.0);
    let gamma = 1.0;
    for r in [1e-1, 1e-2, 1e-3] {
        let (u, _) = series_start(&spec, gamma, r);
        let curvature = (u - gamma) * 2.0 / (r * r);
        let slack = 2.0 * r.powi(3) + 4.0 * f64::EPSILON / (r * r);
        assert!((curvature - gamma / 3.0).abs() < slack, "r={r}: {curvature}");
    }
    let (_, v) = series_start(&spec, 1.0, 1e-6);
    assert!(((v - 1e-6 / 3.0) / (1e-6 / 3.0)).abs() < 1e-12);
}

#[test]
fn series_flat_when_forcing_balances_at_origin() {
    use crate::problem::{GeneralSpec, Limit, Nonlinearity, Weight};
    use std::sync::Arc;
    // φ(0) = ℓ = 2 and f(γ) = γ/ℓ at γ = 0.5 for f(s) = s².
    let spec: ProblemSpec = GeneralSpec::new(
        3,
        Weight::Custom {
            name: "2 + r".into(),
            eval: Arc::new(|r| 2.0 + r),
            leading_power: None,
            limit: Limit::Unbounded,
        },
        Nonlinearity::Power { p: 2.0 },
    )
    .unwrap()
    .into();
    let (u, v) = series_start(&spec, 0.5, 1e-3);
    assert_eq!(u, 0.5);
    assert_eq!(v, 0.0);
}

#[test]
fn series_error_is_fourth_order_in_handoff_radius() {
    let spec = henon(3, 3.0, 5.0);
    // The truncated series omits O(r⁴) terms; compare against an accurate
    // integration started much closer to the origin.
    let opts = IntegratorOptions::default().with_tolerance(1e-13);
    let traj = integrate(&spec, 1.0, 0.5, &opts);
    let err = |r: f64| (series_start(&spec, 1.0, r).0 - traj.eval(r).unwrap().0).abs();
    let (e1, e2) = (err(0.08), err(0.04));
    let ratio = e1 / e2;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio} ({e1}, {e2})");
}

#[test]
fn matches_fixed_step_oracle() {
    for (spec, gamma) in [
        (henon(3, 3.0, 5.0), 1.0),
        (henon(4, 5.0, 8.0), 1.034),
        (henon(10, 5.0, 2.75), 1.2),
    ] {
        let traj = integrate(&spec, gamma, 1.0, &IntegratorOptions::default());
        let (u, v) = traj.eval(1.0).unwrap();
        let r0 = traj.r_start();
        let (uo, vo) = rk4_state(&spec, gamma, r0, 1.0, 200_000);
        assert!((u - uo).abs() < 1e-8 * uo.abs().max(1.0), "{u} vs {uo}");
        assert!((v - vo).abs() < 1e-8 * vo.abs().max(1.0), "{v} vs {vo}");
    }
}

#[test]
fn dense_output_between_nodes() {
    let spec = henon(3, 3.0, 5.0);
    let traj = integrate(&spec, 1.0, 1.0, &IntegratorOptions::default());
    for r in [0.123, 0.5, 0.77, 0.999] {
        let (u, _) = traj.eval(r).unwrap();
        let (uo, _) = rk4_state(&spec, 1.0, traj.r_start(), r, 100_000);
        assert!((u - uo).abs() < 1e-9, "r={r}");
    }
    assert!(traj.eval(1.5).is_none());
    assert_eq!(traj.eval(0.0).unwrap().0, 1.0);
}

#[test]
fn nodes_increase_and_stay_positive() {
    let traj = integrate(&henon(4, 5.0, 8.0), 1.034, 10.0, &IntegratorOptions::default());
    assert_eq!(traj.termination, Termination::ReachedRMax);
    assert!(traj.nodes.windows(2).all(|w| w[1].r > w[0].r));
    assert!(traj.nodes.iter().all(|n| n.u > 0.0));
    assert!(traj.nodes[0].v >= 0.0);
    assert_eq!(traj.r_end(), 10.0);
}

#[test]
fn critical_case_oscillates_supercritical_does_not() {
    let opts = IntegratorOptions::default();
    let osc = integrate(&henon(4, 5.0, 8.0), 1.034, 10.0, &opts);
    assert!(osc.stationary_radii().len() >= 5, "{:?}", osc.stationary_radii());
    let flat = integrate(&henon(4, 5.0, 17.0), 1.034, 10.0, &opts);
    let late: Vec<f64> = flat.stationary_radii().into_iter().filter(|&r| r > 0.2).collect();
    assert!(late.len() <= 1, "{late:?}");
}

#[test]
fn crossing_precedes_first_stationary_point() {
    let opts = IntegratorOptions::default();
    for (spec, gamma) in [
        (henon(3, 3.0, 5.0), 1.0816),
        (henon(4, 5.0, 8.0), 155.0),
        (henon(10, 200.0, 50.0), 1.0135),
        (henon(2, 5.0, 2.0), 0.7),
        (henon(3, 3.0, 5.0), 0.05),
    ] {
        let traj = integrate(&spec, gamma, 40.0, &opts);
        let first = traj.events.first().expect("events");
        assert_eq!(first.kind, EventKind::BarrierCrossing, "{spec:?} {gamma}");
        let r_stat = traj.nth_stationary(1).expect("stationary point");
        assert!(first.r < r_stat);
    }
}

#[test]
fn first_stationary_point_is_a_strict_maximum() {
    let opts = IntegratorOptions::default();
    for (spec, gamma) in [
        (henon(3, 3.0, 5.0), 1.0816),
        (henon(4, 5.0, 8.0), 2584.0),
        (henon(5, 9.0, 12.0), 1.0147),
    ] {
        let traj = integrate(&spec, gamma, 10.0, &opts);
        let ev = traj.events_of(EventKind::Stationary).next().unwrap();
        let d2 = ev.second_derivative.unwrap();
        let closed = ev.u_value - spec.forcing(ev.r, ev.u_value);
        assert!(d2 < 0.0 && !ev.degenerate);
        assert!(((d2 - closed) / closed).abs() < 1e-6, "{d2} vs {closed}");
        assert!(traj.eval(ev.r).unwrap().1.abs() < 1e-9 * d2.abs().max(1.0));
    }
}

#[test]
fn flux_nondecreasing_before_first_crossing() {
    let spec = henon(4, 5.0, 8.0);
    let traj = integrate(&spec, 1.0306, 2.0, &IntegratorOptions::default());
    let r_cross = traj.events_of(EventKind::BarrierCrossing).next().unwrap().r;
    let flux: Vec<f64> = traj
        .nodes
        .iter()
        .take_while(|n| n.r <= r_cross)
        .map(|n| n.r.powi(3) * n.v)
        .collect();
    assert!(flux.iter().all(|&a| a >= 0.0));
    assert!(flux.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn integral_identity_holds() {
    let opts = IntegratorOptions::default();
    for (spec, gamma, r_max) in [
        (henon(3, 3.0, 5.0), 1.0816, 1.1),
        (henon(4, 5.0, 8.0), 1.034, 10.0),
        (henon(4, 5.0, 8.0), 155.0, 10.0),
        (henon(10, 200.0, 50.0), 1.0135, 1.1),
        (henon(2, 5.0, 2.0), 3.0, 5.0),
    ] {
        let traj = integrate(&spec, gamma, r_max, &opts);
        let res = verify_integral_identity(&traj, 1e-12);
        assert!(res < 1e-6, "{spec:?} gamma={gamma}: {res}");
    }
}

#[test]
fn integral_identity_small_gamma() {
    let spec = henon(3, 3.0, 5.0);
    let opts = IntegratorOptions::default();
    let big = verify_integral_identity(&integrate(&spec, 1e-3, 2.0, &opts), 1e-12);
    let small = verify_integral_identity(&integrate(&spec, 1e-6, 2.0, &opts), 1e-12);
    assert!(big < 1e-6 && small < 1e-6);
    assert!(small <= big, "{small} > {big}");
}

#[test]
fn tolerance_halving_changes_little() {
    let spec = henon(3, 3.0, 5.0);
    let base = IntegratorOptions::default();
    let u_at = |tol: f64| integrate(&spec, 1.0816, 1.0, &base.with_tolerance(tol)).eval(1.0).unwrap().0;
    let diff = (u_at(1e-10) - u_at(5e-11)).abs();
    assert!(diff < 10.0 * 1e-10 * u_at(1e-10).abs().max(1.0), "{diff}");
}

#[test]
fn at_most_two_crossings_below_monotonicity_bound() {
    let spec = henon(2, 5.0, 2.0);
    assert!(1.0 < monotonicity_bound(2, 5.0));
    for gamma in crate::problem::log_grid(1e-2, 1e3, 25) {
        let traj = integrate(&spec, gamma, 1.0, &IntegratorOptions::default());
        let crossings = traj.events_of(EventKind::BarrierCrossing).count();
        assert!(crossings <= 2, "gamma={gamma}: {crossings}");
    }
}

#[test]
fn blow_up_cap_terminates() {
    let spec = henon(3, 3.0, 5.0);
    let opts = IntegratorOptions { u_blow_up_cap: 0.2, ..Default::default() };
    let traj = integrate(&spec, 0.01, 50.0, &opts);
    assert_eq!(traj.termination, Termination::BlowUp);
    let last = traj.events.last().unwrap();
    assert_eq!(last.kind, EventKind::BlowUp);
    assert!((traj.nodes.last().unwrap().u - 0.2).abs() < 1e-8);
    assert_eq!(traj.r_end(), last.r);
}

#[test]
fn positivity_loss_terminates() {
    // Strong forcing drives u through zero after the first maximum.
    let spec = henon(3, 1.0, 3.0);
    let traj = integrate(&spec, 30.0, 10.0, &IntegratorOptions::default());
    assert_eq!(traj.termination, Termination::PositivityLoss, "{:?}", traj.events);
    let last = traj.nodes.last().unwrap();
    assert!(last.u.abs() < 1e-9);
    assert!(traj.nodes[..traj.nodes.len() - 1].iter().all(|n| n.u > 0.0));
}

#[test]
fn step_budget_exhaustion_is_reported() {
    let opts = IntegratorOptions { max_steps: 10, ..Default::default() };
    let traj = integrate(&henon(3, 3.0, 5.0), 1.0, 10.0, &opts);
    assert_eq!(traj.termination, Termination::StepFailure);
    assert!(traj.r_end() < 10.0);
}

#[test]
fn rebuilt_from_nodes_keeps_events() {
    let spec = henon(4, 5.0, 8.0);
    let traj = integrate(&spec, 1.034, 10.0, &IntegratorOptions::default());
    let rebuilt = Trajectory::from_nodes(spec, traj.nodes.clone(), &IntegratorOptions::default()).unwrap();
    assert!((rebuilt.gamma - 1.034).abs() < 1e-12);
    let a = traj.stationary_radii();
    let b = rebuilt.stationary_radii();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-5, "{x} vs {y}");
    }
    let mut shuffled = traj.nodes.clone();
    shuffled.swap(3, 7);
    let err = Trajectory::from_nodes(traj.spec.clone(), shuffled, &IntegratorOptions::default()).unwrap_err();
    assert!(err.to_string().contains("nodes not strictly increasing"));
}

#[test]
fn handoff_shrinks_for_large_gamma() {
    let spec = henon(4, 5.0, 8.0);
    let opts = IntegratorOptions::default();
    assert_eq!(effective_r_start(&spec, 1.0, &opts), 1e-6);
    let r = effective_r_start(&spec, 1e6, &opts);
    assert!(r < 1e-9);
    let traj = integrate(&spec, 1e6, 2.0, &opts);
    let r1 = traj.nth_stationary(1).unwrap();
    assert!(r1 > r && r1 < 1e-7, "{r1}");
}
