//! Outward integration of the singular radial IVP
//! `u'' + (N-1)/r u' = u - φ(r) f(u)`, `u(0) = γ`, `u'(0) = 0`.
//!
//! The origin is skipped with a truncated power series; the rest of the
//! trajectory comes from an adaptive Dormand-Prince 5(4) integrator whose
//! dense output is used to locate sign changes of `u'` (stationary points),
//! of `u - barrier(r)` (barrier crossings), and the terminal conditions
//! `u ≤ 0` and `u > cap`.

mod dense;
mod events;

pub use dense::DenseSegment;

use serde::Serialize;

use crate::problem::ProblemSpec;
use dense::{try_step, State};
use events::EventScanner;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Trajectories stop with `BlowUp` once `u > u_blow_up_cap * max(1, γ)`.
    pub u_blow_up_cap: f64,
    /// Width (in `r`) below which event bisection stops.
    pub event_tol: f64,
    /// Requested series handoff radius; shrunk automatically when the
    /// forcing term is not yet negligible there.
    pub r_start: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Stationary points with `|u''|` below this are flagged degenerate.
    pub degenerate_threshold: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            u_blow_up_cap: 1e8,
            event_tol: 1e-12,
            r_start: 1e-6,
            h_max: 0.05,
            max_steps: 2_000_000,
            degenerate_threshold: 1e-8,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Stationary,
    BarrierCrossing,
    BlowUp,
    PositivityLoss,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Stationary => "stationary",
            EventKind::BarrierCrossing => "barrier_crossing",
            EventKind::BlowUp => "blow_up",
            EventKind::PositivityLoss => "positivity_loss",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stationary" => Some(EventKind::Stationary),
            "barrier_crossing" => Some(EventKind::BarrierCrossing),
            "blow_up" => Some(EventKind::BlowUp),
            "positivity_loss" => Some(EventKind::PositivityLoss),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub r: f64,
    /// Zero-based ordinal among events of the same kind.
    pub index: usize,
    pub u_value: f64,
    /// `u''` at a stationary point (derivative of the dense `u'`).
    pub second_derivative: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedRMax,
    BlowUp,
    PositivityLoss,
    StepFailure,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReachedRMax => "reached_r_max",
            Termination::BlowUp => "blow_up",
            Termination::PositivityLoss => "positivity_loss",
            Termination::StepFailure => "step_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub r: f64,
    pub u: f64,
    pub v: f64,
}

/// Numerical solution of the shooting IVP.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub spec: ProblemSpec,
    pub gamma: f64,
    pub nodes: Vec<Node>,
    pub segments: Vec<DenseSegment>,
    pub events: Vec<Event>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn r_start(&self) -> f64 {
        self.nodes[0].r
    }

    pub fn r_end(&self) -> f64 {
        self.nodes.last().map(|n| n.r).unwrap_or(0.0)
    }

    /// `(u, u')` at `r`, from the series below the first node and the dense
    /// output above it. `None` outside `[0, r_end]`.
    pub fn eval(&self, r: f64) -> Option<(f64, f64)> {
        if r < 0.0 || r > self.r_end() {
            return None;
        }
        if r <= self.r_start() {
            return Some(series_start(&self.spec, self.gamma, r));
        }
        let i = self
            .segments
            .partition_point(|s| s.r0 <= r)
            .saturating_sub(1);
        let y = self.segments.get(i)?.eval(r);
        Some((y[0], y[1]))
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> + '_ {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn stationary_radii(&self) -> Vec<f64> {
        self.events_of(EventKind::Stationary).map(|e| e.r).collect()
    }

    /// Radius of the `n`-th (1-based) stationary point.
    pub fn nth_stationary(&self, n: usize) -> Option<f64> {
        self.events_of(EventKind::Stationary)
            .nth(n.checked_sub(1)?)
            .map(|e| e.r)
    }

    /// Rebuilds a trajectory from stored nodes, using cubic Hermite
    /// interpolation (`u'` and `u'' = rhs` at the nodes) and re-detecting
    /// events on it. Nodes must be strictly increasing in `r`.
    pub fn from_nodes(
        spec: ProblemSpec,
        nodes: Vec<Node>,
        opts: &IntegratorOptions,
    ) -> crate::Result<Trajectory> {
        if nodes.len() < 2 {
            return Err(crate::Error::InvalidInput(
                "trajectory needs at least two nodes".into(),
            ));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1].r > w[0].r)) {
            return Err(crate::Error::InvalidInput(format!(
                "nodes not strictly increasing (r = {} followed by r = {})",
                w[0].r, w[1].r
            )));
        }
        if !(nodes[0].r > 0.0) {
            return Err(crate::Error::InvalidInput(
                "first node must have r > 0".into(),
            ));
        }
        let gamma = series_gamma_from_node(&spec, &nodes[0]);
        let cap = opts.u_blow_up_cap * gamma.max(1.0);
        let mut scanner = EventScanner::new(&spec, nodes[0].r, [nodes[0].u, nodes[0].v], cap, opts);
        let mut segments = Vec::with_capacity(nodes.len() - 1);
        let mut events = Vec::new();
        let mut termination = Termination::ReachedRMax;
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let fa = spec.rhs(a.r, a.u, a.v);
            let fb = spec.rhs(b.r, b.u, b.v);
            let seg = DenseSegment::hermite(a.r, [a.u, a.v], fa, b.r, [b.u, b.v], fb);
            let outcome = scanner.scan(&seg, [b.u, b.v], &mut events);
            segments.push(seg);
            if let Some(t) = outcome {
                termination = t;
                break;
            }
        }
        let mut nodes = nodes;
        nodes.truncate(segments.len() + 1);
        Ok(Trajectory {
            spec,
            gamma,
            nodes,
            segments,
            events,
            termination,
        })
    }
}

/// Recovers `γ` from a node near the origin by inverting the leading term of
/// the series `u ≈ γ (1 + r²/(2N))`.
fn series_gamma_from_node(spec: &ProblemSpec, node: &Node) -> f64 {
    let n = spec.dim() as f64;
    node.u / (1.0 + node.r * node.r / (2.0 * n))
}

/// Truncated power series of the solution near the origin.
///
/// With a declared `φ(r) = r^a + …` (and `φ(0) = 0`):
/// `u = γ + γ r²/(2N) - f(γ) r^{2+a}/((2+a)(N+a))`,
/// `u' = γ r/N - f(γ) r^{1+a}/(N+a)`.
/// Otherwise `u = γ + (γ - φ(0) f(γ)) r²/(2N)`, `u' = (γ - φ(0) f(γ)) r/N`.
pub fn series_start(spec: &ProblemSpec, gamma: f64, r: f64) -> (f64, f64) {
    let n = spec.dim() as f64;
    let f_gamma = spec.nonlinearity(gamma);
    let ell = spec.weight_at_origin();
    match spec.leading_power() {
        Some(a) if ell == 0.0 => {
            let ra = (a * r.ln()).exp();
            let u = gamma + gamma * r * r / (2.0 * n)
                - f_gamma * ra * r * r / ((2.0 + a) * (n + a));
            let v = gamma * r / n - f_gamma * ra * r / (n + a);
            (u, v)
        }
        _ => {
            let c = gamma - ell * f_gamma;
            (gamma + c * r * r / (2.0 * n), c * r / n)
        }
    }
}

/// Series handoff radius: `opts.r_start`, halved until the forcing term
/// `|φ(r) - φ(0)| f(γ) / γ` is below `1e-6`.
pub fn effective_r_start(spec: &ProblemSpec, gamma: f64, opts: &IntegratorOptions) -> f64 {
    let ell = spec.weight_at_origin();
    let f_gamma = spec.nonlinearity(gamma).abs();
    let mut r = opts.r_start;
    for _ in 0..2000 {
        let phi = spec.weight(r).abs();
        if ((phi - ell).abs() * f_gamma / gamma) <= 1e-6 || r < 1e-290 {
            break;
        }
        r *= 0.5;
    }
    r
}

/// Integrates the shooting IVP from the series handoff point to `r_max`.
///
/// Never panics on numerical trouble: step-size underflow or exhausting
/// `max_steps` yields `Termination::StepFailure` with the partial solution.
pub fn integrate(spec: &ProblemSpec, gamma: f64, r_max: f64, opts: &IntegratorOptions) -> Trajectory {
    let r0 = effective_r_start(spec, gamma, opts);
    let (u0, v0) = series_start(spec, gamma, r0);
    let mut nodes = vec![Node { r: r0, u: u0, v: v0 }];
    let mut segments = Vec::new();
    let mut events = Vec::new();
    let cap = opts.u_blow_up_cap * gamma.max(1.0);

    let mut r = r0;
    let mut y: State = [u0, v0];
    let mut k1 = spec.rhs(r, y[0], y[1]);
    let mut h = 0.1 * r0;
    let mut scanner = EventScanner::new(spec, r0, y, cap, opts);
    let mut termination = Termination::ReachedRMax;
    let mut steps = 0usize;
    let mut last_rejected = false;

    while r < r_max {
        steps += 1;
        if steps > opts.max_steps {
            termination = Termination::StepFailure;
            break;
        }
        h = h.min(opts.h_max).min(r_max - r);
        // Land exactly on r_max instead of leaving a sliver.
        if r_max - r - h < 1e-3 * h {
            h = r_max - r;
        }
        if h <= 8.0 * f64::EPSILON * r {
            termination = Termination::StepFailure;
            break;
        }
        let Some(trial) = try_step(spec, r, &y, &k1, h, opts.rel_tol, opts.abs_tol) else {
            h *= 0.25;
            last_rejected = true;
            continue;
        };
        if trial.err > 1.0 {
            h *= (0.9 * trial.err.powf(-0.2)).max(0.2);
            last_rejected = true;
            continue;
        }

        let mut seg = trial.segment;
        if h == r_max - r {
            seg.r_end = r_max;
        }
        let r_new = seg.r_end;
        let outcome = scanner.scan(&seg, trial.y_new, &mut events);
        if let Some(t) = outcome {
            // Truncate the step at the terminal event.
            let ev = events.last().expect("terminal outcome records an event");
            seg.r_end = ev.r;
            let y_ev = seg.eval(ev.r);
            nodes.push(Node { r: ev.r, u: y_ev[0], v: y_ev[1] });
            segments.push(seg);
            termination = t;
            break;
        }
        segments.push(seg);
        nodes.push(Node { r: r_new, u: trial.y_new[0], v: trial.y_new[1] });
        r = r_new;
        y = trial.y_new;
        k1 = trial.k7;

        let mut fac = if trial.err == 0.0 { 5.0 } else { 0.9 * trial.err.powf(-0.2) };
        fac = fac.clamp(0.2, 5.0);
        if last_rejected {
            fac = fac.min(1.0);
        }
        last_rejected = false;
        h *= fac;
    }

    Trajectory {
        spec: spec.clone(),
        gamma,
        nodes,
        segments,
        events,
        termination,
    }
}

const GAUSS5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS5_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn gauss5(a: f64, b: f64, g: &impl Fn(f64) -> f64) -> f64 {
    let m = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GAUSS5_X
        .iter()
        .zip(GAUSS5_W.iter())
        .map(|(x, w)| w * g(m + half * x))
        .sum::<f64>()
        * half
}

fn adaptive_gauss(a: f64, b: f64, g: &impl Fn(f64) -> f64, tol: f64, depth: u32) -> f64 {
    let whole = gauss5(a, b, g);
    let m = 0.5 * (a + b);
    let halves = gauss5(a, m, g) + gauss5(m, b, g);
    if depth == 0 || (whole - halves).abs() <= tol * (1.0 + halves.abs()) {
        halves
    } else {
        adaptive_gauss(a, m, g, tol, depth - 1) + adaptive_gauss(m, b, g, tol, depth - 1)
    }
}

/// Checks `r^{N-1} u'(r) = ∫₀^r s^{N-1} (u - φ f(u)) ds` at every node.
///
/// The integral is accumulated segment by segment with adaptive 5-point
/// Gauss-Legendre quadrature on the dense output (the piece below the first
/// node uses the series). Returns the largest
/// `|A(r) - I(r)| / (1 + |A(r)|)` over nodes.
pub fn verify_integral_identity(traj: &Trajectory, quad_tol: f64) -> f64 {
    let spec = &traj.spec;
    let n1 = spec.dim() as i32 - 1;
    let integrand = |s: f64, u: f64| s.powi(n1) * (u - spec.forcing(s, u));

    let r0 = traj.r_start();
    let head = |s: f64| integrand(s, series_start(spec, traj.gamma, s).0);
    let mut integral = adaptive_gauss(0.0, r0, &head, quad_tol, 8);

    let a0 = r0.powi(n1) * traj.nodes[0].v;
    let mut worst = (a0 - integral).abs() / (1.0 + a0.abs());
    for (seg, node) in traj.segments.iter().zip(traj.nodes.iter().skip(1)) {
        let g = |s: f64| integrand(s, seg.eval(s)[0]);
        integral += adaptive_gauss(seg.r0, seg.r_end, &g, quad_tol, 8);
        let a = node.r.powi(n1) * node.v;
        worst = worst.max((a - integral).abs() / (1.0 + a.abs()));
    }
    worst
}

#[cfg(test)]
mod tests;
