//! Diagnostics over trajectories and scans.
//!
//! Each check returns a [`Check`] that is either passed, failed, or not
//! applicable (its hypotheses are unmet). A [`DiagnosticReport`] bundles the
//! checks for one subject.

use serde::Serialize;

use crate::integrator::{integrate, verify_integral_identity, EventKind, IntegratorOptions, Termination, Trajectory};
use crate::problem::{monotonicity_bound, HenonSpec, ProblemSpec};
use crate::shooting::GammaScan;

/// Every check name, in suite order.
pub const CHECK_NAMES: [&str; 9] = [
    "lemma2",
    "lemma3",
    "lemma45_trend",
    "crossing_count",
    "monotone",
    "neumann",
    "positivity",
    "integral_identity",
    "continuous_dependence",
];

pub const LEMMA3_SIGN_TOL: f64 = 1e-10;
pub const LEMMA3_REL_TOL: f64 = 1e-6;
pub const NEUMANN_TOL: f64 = 1e-6;
pub const IDENTITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::NotApplicable => "n/a",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    /// The property being checked.
    pub anchor: &'static str,
    pub status: CheckStatus,
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, anchor: &'static str, status: CheckStatus) -> Self {
        Check {
            name,
            anchor,
            status,
            measured: None,
            tolerance: None,
            detail: String::new(),
        }
    }

    fn measured(mut self, value: f64) -> Self {
        self.measured = Some(value);
        self
    }

    fn tolerance(mut self, value: f64) -> Self {
        self.tolerance = Some(value);
        self
    }

    fn detail(mut self, text: impl Into<String>) -> Self {
        self.detail = text.into();
        self
    }

    fn not_applicable(name: &'static str, anchor: &'static str, why: impl Into<String>) -> Self {
        Check::new(name, anchor, CheckStatus::NotApplicable).detail(why)
    }

    fn verdict(name: &'static str, anchor: &'static str, ok: bool) -> Self {
        let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
        Check::new(name, anchor, status)
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub subject: String,
    pub checks: Vec<Check>,
}

impl DiagnosticReport {
    /// True when no check failed (not-applicable checks are ignored).
    pub fn all_applicable_passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Keeps only the named checks (all of them when `names` is empty).
    pub fn retain(&mut self, names: &[String]) {
        if !names.is_empty() {
            self.checks.retain(|c| names.iter().any(|n| n == c.name));
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{}\n", self.subject);
        out.push_str(&format!(
            "{:<22} {:<5} {:>24} {:>10}  {}\n",
            "check", "state", "measured", "tol", "detail"
        ));
        for c in &self.checks {
            let measured = c.measured.map(|m| format!("{m:.16e}")).unwrap_or_default();
            let tol = c.tolerance.map(|t| format!("{t:.1e}")).unwrap_or_default();
            out.push_str(&format!(
                "{:<22} {:<5} {:>24} {:>10}  {}\n",
                c.name,
                c.status.as_str(),
                measured,
                tol,
                c.detail
            ));
        }
        out
    }
}

fn first_event(traj: &Trajectory, kind: EventKind) -> Option<&crate::integrator::Event> {
    traj.events_of(kind).next()
}

const ANCHOR_ORDER: &str = "first barrier crossing precedes first stationary point";
const ANCHOR_SIGN: &str = "u'' < 0 at the first stationary point";
const ANCHOR_TREND: &str = "R > 1 for small gamma, R -> 0 for large gamma";
const ANCHOR_CROSSINGS: &str = "at most two barrier crossings on (0,1] below the monotonicity bound";
const ANCHOR_MONOTONE: &str = "u strictly increasing on (0,1)";
const ANCHOR_NEUMANN: &str = "u'(1) = 0";
const ANCHOR_POSITIVE: &str = "u > 0 on [0,1]";
const ANCHOR_IDENTITY: &str = "r^(N-1) u' equals the integral of r^(N-1) (u - phi f(u))";
const ANCHOR_DEPENDENCE: &str = "u(1) depends continuously on gamma";

/// The first barrier crossing `r_γ` lies strictly before the first
/// stationary point `R_γ`, and both are finite.
pub fn check_lemma2(traj: &Trajectory) -> Check {
    let name = "lemma2";
    let Some(stat) = first_event(traj, EventKind::Stationary) else {
        return Check::not_applicable(name, ANCHOR_ORDER, "not applicable: trajectory terminated early");
    };
    match first_event(traj, EventKind::BarrierCrossing) {
        Some(cross) => Check::verdict(name, ANCHOR_ORDER, cross.r < stat.r)
            .measured(stat.r - cross.r)
            .detail(format!("r_gamma = {:.12e}, R = {:.12e}", cross.r, stat.r)),
        None => Check::verdict(name, ANCHOR_ORDER, false)
            .detail(format!("no barrier crossing before R = {:.12e}", stat.r)),
    }
}

/// `u''(R_γ) < -1e-10` and agrees with `u - φ(R) f(u)` (relative `1e-6`).
pub fn check_lemma3(traj: &Trajectory) -> Check {
    let name = "lemma3";
    let Some(stat) = first_event(traj, EventKind::Stationary) else {
        return Check::not_applicable(name, ANCHOR_SIGN, "not applicable: no stationary point");
    };
    let d2 = stat.second_derivative.unwrap_or(f64::NAN);
    if stat.degenerate {
        return Check::verdict(name, ANCHOR_SIGN, false)
            .measured(d2)
            .tolerance(LEMMA3_SIGN_TOL)
            .detail(format!("degenerate stationary point at R = {:.12e}", stat.r));
    }
    let u = stat.u_value;
    let closed = u - traj.spec.forcing(stat.r, u);
    let rel = (d2 - closed).abs() / closed.abs().max(f64::MIN_POSITIVE);
    let ok = d2 < -LEMMA3_SIGN_TOL && rel < LEMMA3_REL_TOL;
    Check::verdict(name, ANCHOR_SIGN, ok)
        .measured(d2)
        .tolerance(LEMMA3_SIGN_TOL)
        .detail(format!("closed form {closed:.12e}, relative mismatch {rel:.3e}"))
}

/// `R¹ > 1` at the smallest scanned `γ`; at the largest `γ` with a
/// stationary point, `R¹ < 0.1` and below the value at the smallest `γ`.
/// A missing `R¹` at the small end counts as `R¹ > r_max`.
pub fn check_lemma45_trend(scan: &GammaScan) -> Check {
    let name = "lemma45_trend";
    let (Some(first), Some(_)) = (scan.records.first(), scan.records.last()) else {
        return Check::not_applicable(name, ANCHOR_TREND, "not applicable: empty scan");
    };
    let lo = scan.gammas[0];
    let hi = scan.gammas[scan.gammas.len() - 1];
    if lo > 1e-2 * (1.0 + 1e-12) || hi < 1e3 * (1.0 - 1e-12) {
        return Check::not_applicable(
            name,
            ANCHOR_TREND,
            format!("not applicable: scan [{lo}, {hi}] does not cover [1e-2, 1e3]"),
        );
    }
    let r_small = first.radius(1).unwrap_or(f64::INFINITY);
    let Some(last) = scan.records.iter().rev().find(|r| r.radius(1).is_some()) else {
        return Check::verdict(name, ANCHOR_TREND, false).detail("no stationary point anywhere in the scan");
    };
    let r_large = last.radius(1).unwrap();
    let ok = r_small > 1.0 && r_large < 0.1 && r_large < r_small;
    Check::verdict(name, ANCHOR_TREND, ok)
        .measured(r_large)
        .tolerance(0.1)
        .detail(format!(
            "R1({lo:.3e}) = {r_small:.6e}, R1({:.3e}) = {r_large:.6e}",
            last.gamma
        ))
}

/// At most two barrier crossings on `(0, 1]` when `p - 1` is below
/// [`monotonicity_bound`]. Only sign changes are detected, so a tangential
/// touch of the barrier is not counted.
pub fn check_crossing_count(traj: &Trajectory, spec: &HenonSpec) -> Check {
    let name = "crossing_count";
    let bound = monotonicity_bound(spec.dim, spec.alpha);
    if !(spec.p - 1.0 < bound) {
        return Check::not_applicable(
            name,
            ANCHOR_CROSSINGS,
            format!("not applicable: p - 1 = {} >= bound {bound:.6}", spec.p - 1.0),
        );
    }
    if traj.r_end() < 1.0 {
        return Check::not_applicable(name, ANCHOR_CROSSINGS, "not applicable: trajectory ends before r = 1");
    }
    let count = traj
        .events_of(EventKind::BarrierCrossing)
        .filter(|e| e.r <= 1.0)
        .count();
    Check::verdict(name, ANCHOR_CROSSINGS, count <= 2)
        .measured(count as f64)
        .tolerance(2.0)
        .detail(format!("{count} crossing(s) in (0,1]"))
}

/// `u` strictly increasing over the nodes in `(0, 1)`. Not applicable when
/// the first stationary point lies inside the unit ball (higher-index
/// solutions).
pub fn check_monotone(traj: &Trajectory) -> Check {
    let name = "monotone";
    if traj.r_end() < 1.0 {
        return Check::not_applicable(name, ANCHOR_MONOTONE, "not applicable: trajectory ends before r = 1");
    }
    let r1 = traj.nth_stationary(1).unwrap_or(f64::INFINITY);
    if r1 < 1.0 - NEUMANN_TOL {
        return Check::not_applicable(
            name,
            ANCHOR_MONOTONE,
            format!("not applicable: first stationary point at {r1:.6e} < 1"),
        );
    }
    let limit = r1.min(1.0);
    let inner: Vec<_> = traj.nodes.iter().filter(|n| n.r < limit).collect();
    let bad = inner.windows(2).find(|w| !(w[1].u > w[0].u));
    let min_slope = inner.iter().map(|n| n.v).fold(f64::INFINITY, f64::min);
    match bad {
        None if min_slope > 0.0 => Check::verdict(name, ANCHOR_MONOTONE, true)
            .measured(min_slope)
            .detail(format!("{} nodes, min u' = {min_slope:.6e}", inner.len())),
        None => Check::verdict(name, ANCHOR_MONOTONE, false)
            .measured(min_slope)
            .detail("u' not positive at some node"),
        Some(w) => Check::verdict(name, ANCHOR_MONOTONE, false)
            .detail(format!("u does not increase between r = {} and r = {}", w[0].r, w[1].r)),
    }
}

/// `|u'(1)| < 1e-6 · max(1, |u(1)|)`.
pub fn check_neumann(traj: &Trajectory) -> Check {
    let name = "neumann";
    let Some((u, v)) = traj.eval(1.0) else {
        return Check::not_applicable(name, ANCHOR_NEUMANN, "not applicable: trajectory ends before r = 1");
    };
    let scaled = v.abs() / u.abs().max(1.0);
    Check::verdict(name, ANCHOR_NEUMANN, scaled < NEUMANN_TOL)
        .measured(v)
        .tolerance(NEUMANN_TOL)
        .detail(format!("u(1) = {u:.12e}"))
}

/// `u > 0` at every node in `[0, 1]`.
pub fn check_positivity(traj: &Trajectory) -> Check {
    let name = "positivity";
    let min_u = traj
        .nodes
        .iter()
        .filter(|n| n.r <= 1.0)
        .map(|n| n.u)
        .fold(f64::INFINITY, f64::min);
    let ended_early = traj.r_end() < 1.0 && traj.termination == Termination::PositivityLoss;
    Check::verdict(name, ANCHOR_POSITIVE, min_u > 0.0 && !ended_early)
        .measured(min_u)
        .detail(format!("termination {}", traj.termination.as_str()))
}

pub fn check_integral_identity(traj: &Trajectory) -> Check {
    let name = "integral_identity";
    if traj.termination == Termination::StepFailure {
        return Check::not_applicable(name, ANCHOR_IDENTITY, "not applicable: step failure");
    }
    let residual = verify_integral_identity(traj, 1e-12);
    Check::verdict(name, ANCHOR_IDENTITY, residual < IDENTITY_TOL)
        .measured(residual)
        .tolerance(IDENTITY_TOL)
}

/// `d(h) = |u_{γ+h}(1) - u_γ(1)|` for `h = 1e-3, 1e-4, 1e-5` must decrease
/// with a first-order trend (each ratio within `[5, 20]`).
pub fn check_continuous_dependence(spec: &ProblemSpec, gamma: f64, opts: &IntegratorOptions) -> Check {
    let name = "continuous_dependence";
    let u1 = |g: f64| integrate(spec, g, 1.0, opts).eval(1.0).map(|y| y.0);
    let Some(base) = u1(gamma) else {
        return Check::not_applicable(name, ANCHOR_DEPENDENCE, "not applicable: trajectory ends before r = 1");
    };
    let mut diffs = Vec::with_capacity(3);
    for h in [1e-3, 1e-4, 1e-5] {
        match u1(gamma + h) {
            Some(u) => diffs.push((u - base).abs()),
            None => {
                return Check::not_applicable(
                    name,
                    ANCHOR_DEPENDENCE,
                    format!("not applicable: perturbed trajectory ends before r = 1 (h = {h})"),
                )
            }
        }
    }
    let ratios = [diffs[0] / diffs[1], diffs[1] / diffs[2]];
    let ok = ratios.iter().all(|q| (5.0..=20.0).contains(q));
    Check::verdict(name, ANCHOR_DEPENDENCE, ok)
        .measured(diffs[2])
        .detail(format!(
            "d = [{:.3e}, {:.3e}, {:.3e}], ratios [{:.3}, {:.3}]",
            diffs[0], diffs[1], diffs[2], ratios[0], ratios[1]
        ))
}

/// Runs every trajectory check, plus the scan trend check when a scan is
/// supplied.
pub fn full_suite(traj: &Trajectory, scan: Option<&GammaScan>, opts: &IntegratorOptions) -> DiagnosticReport {
    let mut checks = vec![check_lemma2(traj), check_lemma3(traj)];
    match scan {
        Some(s) => checks.push(check_lemma45_trend(s)),
        None => checks.push(Check::not_applicable("lemma45_trend", ANCHOR_TREND, "not applicable: no scan")),
    }
    match traj.spec.henon() {
        Some(h) => checks.push(check_crossing_count(traj, h)),
        None => checks.push(Check::not_applicable(
            "crossing_count",
            ANCHOR_CROSSINGS,
            "not applicable: general problem",
        )),
    }
    checks.push(check_monotone(traj));
    checks.push(check_neumann(traj));
    checks.push(check_positivity(traj));
    checks.push(check_integral_identity(traj));
    checks.push(check_continuous_dependence(&traj.spec, traj.gamma, opts));
    DiagnosticReport {
        subject: format!("{} gamma={:.16e}", traj.spec.label(), traj.gamma),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{Event, Node};

    fn henon(n: u32, a: f64, p: f64) -> ProblemSpec {
        HenonSpec::new(n, a, p).unwrap().into()
    }

    #[test]
    fn lemma_checks_pass_on_converged_solution() {
        let spec = henon(3, 3.0, 5.0);
        let res = crate::shoot(&spec, 1, 1e-6).unwrap();
        let report = full_suite(&res.trajectory, None, &IntegratorOptions::default());
        for c in &report.checks {
            assert_ne!(c.status, CheckStatus::Fail, "{c:?}");
        }
        assert_eq!(report.get("lemma2").unwrap().status, CheckStatus::Pass);
        assert_eq!(report.get("lemma3").unwrap().status, CheckStatus::Pass);
        assert_eq!(report.get("crossing_count").unwrap().status, CheckStatus::NotApplicable);
        assert_eq!(report.get("continuous_dependence").unwrap().status, CheckStatus::Pass);
    }

    #[test]
    fn lemma2_not_applicable_without_stationary_point() {
        let traj = integrate(&henon(3, 3.0, 5.0), 0.01, 0.5, &IntegratorOptions::default());
        assert!(traj.events.is_empty());
        let c = check_lemma2(&traj);
        assert_eq!(c.status, CheckStatus::NotApplicable);
        assert!(c.detail.contains("terminated early"));
    }

    #[test]
    fn lemma3_degenerate_event_fails() {
        let spec = henon(3, 3.0, 5.0);
        let mut traj = integrate(&spec, 1.0816, 1.1, &IntegratorOptions::default());
        // Place u exactly on the barrier at the event: u'' = 0 there.
        let idx = traj.events.iter().position(|e| e.kind == EventKind::Stationary).unwrap();
        let r = traj.events[idx].r;
        let c = crate::problem::barrier_c(spec.henon().unwrap(), r).unwrap();
        traj.events[idx] = Event {
            u_value: c,
            second_derivative: Some(0.0),
            degenerate: true,
            ..traj.events[idx]
        };
        let check = check_lemma3(&traj);
        assert_eq!(check.status, CheckStatus::Fail);
        assert!(check.detail.contains("degenerate"));
    }

    #[test]
    fn crossing_count_applicability() {
        let spec = henon(3, 3.0, 5.0);
        let traj = integrate(&spec, 1.0816, 1.1, &IntegratorOptions::default());
        let c = check_crossing_count(&traj, spec.henon().unwrap());
        assert_eq!(c.status, CheckStatus::NotApplicable);

        let spec = henon(2, 5.0, 2.0);
        let res = crate::shoot(&spec, 1, 1e-6).unwrap();
        let c = check_crossing_count(&res.trajectory, spec.henon().unwrap());
        assert_eq!(c.status, CheckStatus::Pass, "{c:?}");
    }

    #[test]
    fn trend_needs_wide_scan() {
        let spec = henon(3, 3.0, 5.0);
        let opts = IntegratorOptions::default();
        let narrow = crate::shooting::scan(&spec, 0.9, 1.1, 5, 10.0, &opts).unwrap();
        assert_eq!(check_lemma45_trend(&narrow).status, CheckStatus::NotApplicable);
        let wide = crate::shooting::scan(&spec, 1e-2, 1e4, 16, 10.0, &opts).unwrap();
        assert_eq!(check_lemma45_trend(&wide).status, CheckStatus::Pass);
    }

    #[test]
    fn monotone_detects_decrease() {
        let spec = henon(3, 3.0, 5.0);
        let mut traj = integrate(&spec, 1.0815005236, 1.1, &IntegratorOptions::default());
        assert_eq!(check_monotone(&traj).status, CheckStatus::Pass);
        traj.nodes[10] = Node { u: traj.nodes[9].u - 1e-3, ..traj.nodes[10] };
        assert_eq!(check_monotone(&traj).status, CheckStatus::Fail);
    }

    #[test]
    fn reports_are_reproducible_and_filterable() {
        let spec = henon(4, 5.0, 8.0);
        let opts = IntegratorOptions::default();
        let traj = integrate(&spec, 1.0306, 1.1, &opts);
        let a = full_suite(&traj, None, &opts);
        let b = full_suite(&integrate(&spec, 1.0306, 1.1, &opts), None, &opts);
        assert_eq!(a, b);
        let mut only = a.clone();
        only.retain(&["lemma3".to_string()]);
        assert_eq!(only.checks.len(), 1);
        assert!(a.to_table().contains("lemma3"));
    }
}
