//! Radial Neumann problems on the unit ball.
//!
//! A radial solution `u(r)` of `-Δu + u = φ(|x|) f(u)` satisfies
//!
//! ```text
//! -u'' - (N-1)/r u' + u = φ(r) f(u),   u'(0) = u'(1) = 0,
//! ```
//!
//! and the Hénon case is `φ(r) = r^α`, `f(u) = u^p`. The curve on which
//! `u = φ(r) f(u)` (the barrier) separates the regions where
//! `A(r) = r^{N-1} u'(r)` grows and shrinks; for Hénon it is
//! `c(r) = r^{-α/(p-1)}`.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;

use crate::error::{Error, Result};

/// A real function of one variable, shared between threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A limit value that may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    Finite(f64),
    Unbounded,
}

impl Limit {
    /// `1 / self`, with `1/∞ = 0` and `1/0 = ∞`.
    pub fn reciprocal(self) -> Limit {
        match self {
            Limit::Unbounded => Limit::Finite(0.0),
            Limit::Finite(0.0) => Limit::Unbounded,
            Limit::Finite(x) => Limit::Finite(1.0 / x),
        }
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::Finite(x) => write!(f, "{x}"),
            Limit::Unbounded => write!(f, "inf"),
        }
    }
}

/// The Hénon instance `-u'' - (N-1)/r u' + u = r^α u^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HenonSpec {
    pub dim: u32,
    pub alpha: f64,
    pub p: f64,
}

impl HenonSpec {
    pub fn new(dim: u32, alpha: f64, p: f64) -> Result<Self> {
        let spec = HenonSpec { dim, alpha, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidInput(format!(
                "N must be at least 2 (got {})",
                self.dim
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be positive (got {})",
                self.alpha
            )));
        }
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(Error::InvalidInput(format!(
                "p must exceed 1 (got {})",
                self.p
            )));
        }
        Ok(())
    }

    /// `r^α u^p`, evaluated in the log domain so that huge `r^α` times tiny
    /// `u^p` does not produce `inf * 0`. Odd in `u`.
    pub fn forcing(&self, r: f64, u: f64) -> f64 {
        if r <= 0.0 || u == 0.0 {
            return 0.0;
        }
        let mag = (self.alpha * r.ln() + self.p * u.abs().ln()).exp();
        mag.copysign(u)
    }

    /// The same problem expressed through the general pathway.
    pub fn as_general(&self) -> GeneralSpec {
        GeneralSpec::new(
            self.dim,
            Weight::Power { alpha: self.alpha },
            Nonlinearity::Power { p: self.p },
        )
        .expect("a valid Hénon spec is a valid general spec")
    }
}

/// Radial weight `φ`.
#[derive(Clone)]
pub enum Weight {
    /// `r^α`
    Power { alpha: f64 },
    /// `r^α + r^β`
    TwoPower { alpha: f64, beta: f64 },
    /// An opaque callable. `leading_power` declares `φ(r) ~ r^a` near the
    /// origin (unit coefficient) and enables the two-term series start.
    Custom {
        name: String,
        eval: ScalarFn,
        leading_power: Option<f64>,
        limit: Limit,
    },
}

impl Weight {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Weight::Power { alpha } => r.powf(*alpha),
            Weight::TwoPower { alpha, beta } => r.powf(*alpha) + r.powf(*beta),
            Weight::Custom { eval, .. } => eval(r),
        }
    }

    pub fn leading_power(&self) -> Option<f64> {
        match self {
            Weight::Power { alpha } => Some(*alpha),
            Weight::TwoPower { alpha, beta } => Some(alpha.min(*beta)),
            Weight::Custom { leading_power, .. } => *leading_power,
        }
    }

    fn limit_at_infinity(&self) -> Limit {
        match self {
            Weight::Power { .. } | Weight::TwoPower { .. } => Limit::Unbounded,
            Weight::Custom { limit, .. } => *limit,
        }
    }
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Power { alpha } => write!(f, "r^{alpha}"),
            Weight::TwoPower { alpha, beta } => write!(f, "r^{alpha} + r^{beta}"),
            Weight::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

/// Nonlinearity `f`, with `f(0) = 0`.
#[derive(Clone)]
pub enum Nonlinearity {
    /// `s^p`
    Power { p: f64 },
    /// `exp(γ s^q) - 1`
    Exp { gamma: f64, q: f64 },
    Custom { name: String, eval: ScalarFn },
}

impl Nonlinearity {
    /// Evaluates `f(s)` for `s ≥ 0`.
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Nonlinearity::Power { p } => s.powf(*p),
            Nonlinearity::Exp { gamma, q } => (gamma * s.powf(*q)).exp_m1(),
            Nonlinearity::Custom { eval, .. } => eval(s),
        }
    }

    /// Odd extension to negative arguments, used only inside trial
    /// Runge-Kutta stages that overshoot zero.
    pub fn eval_odd(&self, s: f64) -> f64 {
        if s < 0.0 {
            -self.eval(-s)
        } else {
            self.eval(s)
        }
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Power { p } => write!(f, "s^{p}"),
            Nonlinearity::Exp { gamma, q } => write!(f, "exp({gamma} s^{q}) - 1"),
            Nonlinearity::Custom { name, .. } => write!(f, "custom({name})"),
        }
    }
}

/// `-u'' - (N-1)/r u' + u = φ(r) f(u)` with user-chosen `φ` and `f`.
#[derive(Debug, Clone)]
pub struct GeneralSpec {
    pub dim: u32,
    pub weight: Weight,
    pub nonlinearity: Nonlinearity,
    /// `φ(0)`
    pub ell: f64,
    /// `lim_{r→∞} φ(r)`
    pub kappa: Limit,
}

impl GeneralSpec {
    pub fn new(dim: u32, weight: Weight, nonlinearity: Nonlinearity) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!(
                "N must be at least 2 (got {dim})"
            )));
        }
        match &weight {
            Weight::Power { alpha } if !(*alpha > 0.0) => {
                return Err(Error::InvalidInput("alpha must be positive".into()))
            }
            Weight::TwoPower { alpha, beta } if !(*alpha > 0.0 && *beta > 0.0) => {
                return Err(Error::InvalidInput(
                    "alpha and beta must be positive".into(),
                ))
            }
            _ => {}
        }
        match &nonlinearity {
            Nonlinearity::Power { p } if !(*p > 1.0) => {
                return Err(Error::InvalidInput("p must exceed 1".into()))
            }
            Nonlinearity::Exp { gamma, q } if !(*gamma > 0.0 && *q >= 1.0) => {
                return Err(Error::InvalidInput(
                    "exp nonlinearity needs gamma > 0 and q >= 1".into(),
                ))
            }
            _ => {}
        }
        let ell = weight.eval(0.0);
        if !(ell.is_finite() && ell >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "phi(0) must be finite and nonnegative (got {ell})"
            )));
        }
        let kappa = weight.limit_at_infinity();
        Ok(GeneralSpec {
            dim,
            weight,
            nonlinearity,
            ell,
            kappa,
        })
    }

    /// `H(u) = u / f(u)`, strictly decreasing under (h2).
    pub fn h_ratio(&self, u: f64) -> f64 {
        let fu = self.nonlinearity.eval(u);
        if fu == 0.0 {
            f64::INFINITY
        } else {
            u / fu
        }
    }
}

/// A radial problem instance.
#[derive(Debug, Clone)]
pub enum ProblemSpec {
    Henon(HenonSpec),
    General(GeneralSpec),
}

impl From<HenonSpec> for ProblemSpec {
    fn from(spec: HenonSpec) -> Self {
        ProblemSpec::Henon(spec)
    }
}

impl From<GeneralSpec> for ProblemSpec {
    fn from(spec: GeneralSpec) -> Self {
        ProblemSpec::General(spec)
    }
}

impl ProblemSpec {
    pub fn dim(&self) -> u32 {
        match self {
            ProblemSpec::Henon(s) => s.dim,
            ProblemSpec::General(s) => s.dim,
        }
    }

    pub fn henon(&self) -> Option<&HenonSpec> {
        match self {
            ProblemSpec::Henon(s) => Some(s),
            ProblemSpec::General(_) => None,
        }
    }

    /// `φ(r) f(u)` (odd in `u`).
    pub fn forcing(&self, r: f64, u: f64) -> f64 {
        match self {
            ProblemSpec::Henon(s) => s.forcing(r, u),
            ProblemSpec::General(s) => s.weight.eval(r) * s.nonlinearity.eval_odd(u),
        }
    }

    /// `φ(r)`.
    pub fn weight(&self, r: f64) -> f64 {
        match self {
            ProblemSpec::Henon(s) => r.powf(s.alpha),
            ProblemSpec::General(s) => s.weight.eval(r),
        }
    }

    /// `φ(0)`.
    pub fn weight_at_origin(&self) -> f64 {
        match self {
            ProblemSpec::Henon(_) => 0.0,
            ProblemSpec::General(s) => s.ell,
        }
    }

    /// Leading power `a` of `φ(r) ~ r^a` at the origin, when declared.
    pub fn leading_power(&self) -> Option<f64> {
        match self {
            ProblemSpec::Henon(s) => Some(s.alpha),
            ProblemSpec::General(s) => s.weight.leading_power(),
        }
    }

    /// `f(s)` for the nonlinearity alone.
    pub fn nonlinearity(&self, s: f64) -> f64 {
        match self {
            ProblemSpec::Henon(h) => s.abs().powf(h.p).copysign(s),
            ProblemSpec::General(g) => g.nonlinearity.eval_odd(s),
        }
    }

    /// Positive iff `u` lies above the barrier curve at `r`, i.e. iff
    /// `A'(r) < 0`. Only the sign is meaningful.
    pub fn barrier_indicator(&self, r: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return -1.0;
        }
        match self {
            ProblemSpec::Henon(s) => s.alpha * r.ln() + (s.p - 1.0) * u.ln(),
            ProblemSpec::General(s) => {
                let ratio = s.weight.eval(r) * s.nonlinearity.eval(u) / u;
                if ratio.is_nan() {
                    -1.0
                } else {
                    ratio - 1.0
                }
            }
        }
    }

    /// Right-hand side of the first-order system `(u, v)' = (v, v')`.
    #[inline]
    pub fn rhs(&self, r: f64, u: f64, v: f64) -> [f64; 2] {
        let n1 = (self.dim() - 1) as f64;
        [v, -n1 * v / r + u - self.forcing(r, u)]
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Henon(s) => format!("henon N={} alpha={} p={}", s.dim, s.alpha, s.p),
            ProblemSpec::General(s) => format!(
                "general N={} phi={:?} f={:?}",
                s.dim, s.weight, s.nonlinearity
            ),
        }
    }
}

/// Which barrier a [`BarrierCurve`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierKind {
    HenonC,
    GeneralXi,
}

/// The curve `u = φ(r) f(u)`, as a function of `r`.
#[derive(Debug, Clone, Copy)]
pub enum BarrierCurve<'a> {
    HenonC(&'a HenonSpec),
    GeneralXi(&'a GeneralSpec),
}

impl<'a> BarrierCurve<'a> {
    pub fn for_problem(spec: &'a ProblemSpec) -> Self {
        match spec {
            ProblemSpec::Henon(s) => BarrierCurve::HenonC(s),
            ProblemSpec::General(s) => BarrierCurve::GeneralXi(s),
        }
    }

    pub fn kind(&self) -> BarrierKind {
        match self {
            BarrierCurve::HenonC(_) => BarrierKind::HenonC,
            BarrierCurve::GeneralXi(_) => BarrierKind::GeneralXi,
        }
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        match self {
            BarrierCurve::HenonC(s) => barrier_c(s, r),
            BarrierCurve::GeneralXi(s) => barrier_xi(s, r),
        }
    }
}

/// `p_α - 1 = (N + 2 + 2α) / (N - 2)`.
pub fn critical_exponent(dim: u32, alpha: f64) -> Result<f64> {
    if dim <= 2 {
        return Err(Error::CriticalExponentUndefined(dim));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidInput("alpha must be nonnegative".into()));
    }
    let n = dim as f64;
    Ok((n + 2.0 + 2.0 * alpha) / (n - 2.0))
}

/// Exact rational form of [`critical_exponent`] for rational `α`.
pub fn critical_exponent_exact(dim: u32, alpha: Ratio<i64>) -> Result<Ratio<i64>> {
    if dim <= 2 {
        return Err(Error::CriticalExponentUndefined(dim));
    }
    if alpha < Ratio::from_integer(0) {
        return Err(Error::InvalidInput("alpha must be nonnegative".into()));
    }
    let n = Ratio::from_integer(dim as i64);
    let two = Ratio::from_integer(2);
    Ok((n + two + two * alpha) / (n - two))
}

/// `c(r) = r^{-α/(p-1)}`.
pub fn barrier_c(spec: &HenonSpec, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("barrier needs r > 0 (got {r})")));
    }
    Ok(r.powf(-spec.alpha / (spec.p - 1.0)))
}

const XI_REL_TOL: f64 = 1e-12;
const XI_MAX_EXPANSIONS: usize = 1100;

/// `ξ(r) = H^{-1}(φ(r))` with `H(u) = u / f(u)`.
///
/// Geometric bracket growth from `u = 1`, then bisection (geometric while the
/// bracket spans more than a factor of four).
pub fn barrier_xi(spec: &GeneralSpec, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("barrier needs r > 0 (got {r})")));
    }
    let target = spec.weight.eval(r);
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::XiFailed { r });
    }
    let residual = |u: f64| (spec.h_ratio(u) - target) / target;

    // H decreases: residual > 0 means u is left of the root.
    let (mut lo, mut hi);
    let at_one = residual(1.0);
    if at_one.abs() < XI_REL_TOL {
        return Ok(1.0);
    }
    if at_one > 0.0 {
        lo = 1.0;
        hi = 2.0;
        let mut k = 0;
        while !(residual(hi) <= 0.0) {
            lo = hi;
            hi *= 2.0;
            k += 1;
            if k > XI_MAX_EXPANSIONS || !hi.is_finite() {
                return Err(Error::XiFailed { r });
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        let mut k = 0;
        while !(residual(lo) >= 0.0) {
            hi = lo;
            lo *= 0.5;
            k += 1;
            if k > XI_MAX_EXPANSIONS || lo < f64::MIN_POSITIVE {
                return Err(Error::XiFailed { r });
            }
        }
    }

    for _ in 0..4000 {
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let res = residual(mid);
        if res.abs() < XI_REL_TOL {
            return Ok(mid);
        }
        if res > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::XiFailed { r })
}

/// `T(N, α) = α (√((N-2)² + 4) - (N-2)) / 2`. When `p - 1 < T`, the barrier
/// is a subsolution of `-Δ + I` on the unit ball and a radial solution
/// crosses it at most twice.
pub fn monotonicity_bound(dim: u32, alpha: f64) -> f64 {
    let m = dim as f64 - 2.0;
    alpha * ((m * m + 4.0).sqrt() - m) / 2.0
}

/// `-c'' - (N-1)/r c' + c` for the Hénon barrier, written as
/// `(p-1)^{-2} r^{-2-α/(p-1)} [ (p-1)² r² + α(N-1)(p-1) - α(α+p-1) ]`.
pub fn subsolution_residual(spec: &HenonSpec, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!(
            "subsolution residual needs r > 0 (got {r})"
        )));
    }
    let pm1 = spec.p - 1.0;
    let a = spec.alpha;
    let n1 = spec.dim as f64 - 1.0;
    let bracket = pm1 * pm1 * r * r + a * n1 * pm1 - a * (a + pm1);
    Ok(r.powf(-2.0 - a / pm1) * bracket / (pm1 * pm1))
}

/// Outcome of one numerical hypothesis check.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// First sample pair that violated a monotonicity requirement.
    pub violation: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Log-spaced grid of `points` values on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && points >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Extrapolates `lim q(s)` from three geometrically spaced samples assuming
/// `q(s) ≈ L + C s^k`. `toward_zero` selects the end of the grid.
fn extrapolate_limit(q: [f64; 3], toward_zero: bool) -> Limit {
    if q.iter().any(|x| x.is_infinite() && *x > 0.0) {
        return Limit::Unbounded;
    }
    let d1 = q[1] - q[0];
    let d2 = q[2] - q[1];
    if d1 == 0.0 {
        return Limit::Finite(q[0]);
    }
    let ratio = d2 / d1;
    // ratio = m^k with m > 1 the grid ratio (samples ordered by increasing s).
    let converges = if toward_zero { ratio > 1.0 } else { ratio < 1.0 };
    if !converges || !ratio.is_finite() {
        return Limit::Unbounded;
    }
    Limit::Finite(q[0] - d1 / (ratio - 1.0))
}

fn limits_agree(found: Limit, expected: Limit, scale: f64) -> bool {
    const REL: f64 = 1e-3;
    match (found, expected) {
        (Limit::Unbounded, Limit::Unbounded) => true,
        (Limit::Finite(a), Limit::Finite(b)) => {
            // A zero limit is judged against the size of the nearest sample.
            let floor = if b == 0.0 { scale } else { 1e-9 * scale.max(1.0) };
            (a - b).abs() <= REL * b.abs().max(floor) + 1e-12
        }
        _ => false,
    }
}

/// Numerical check of (h1)-(h4) on a sample grid.
///
/// The grid must be sorted, positive, and log-spaced (limits are
/// extrapolated from the three extreme samples at each end). Samples where
/// `f(s)/s` saturates to `0` or `+∞` in floating point are skipped for the
/// monotonicity test.
pub fn validate_hypotheses(spec: &GeneralSpec, grid: &[f64]) -> HypothesisReport {
    let mut checks = Vec::with_capacity(4);
    let n = grid.len();
    let enough = n >= 3 && grid.windows(2).all(|w| w[0] > 0.0 && w[1] > w[0]);
    if !enough {
        for name in ["h1", "h2", "h3", "h4"] {
            checks.push(HypothesisCheck {
                name,
                passed: false,
                detail: "sample grid must hold at least 3 increasing positive values".into(),
                violation: None,
            });
        }
        return HypothesisReport { checks };
    }

    // (h1): φ increasing, φ(0) = ℓ ≥ 0, φ → κ.
    let phi: Vec<f64> = grid.iter().map(|&r| spec.weight.eval(r)).collect();
    let phi0 = spec.weight.eval(0.0);
    let mut h1 = HypothesisCheck {
        name: "h1",
        passed: true,
        detail: String::new(),
        violation: None,
    };
    if !(phi0 >= 0.0) || (phi0 - spec.ell).abs() > 1e-12 * (1.0 + spec.ell) {
        h1.passed = false;
        h1.detail = format!("phi(0) = {phi0} but ell = {}", spec.ell);
    } else if let Some(i) = (0..n - 1).find(|&i| !(phi[i + 1] >= phi[i])) {
        h1.passed = false;
        h1.detail = format!("phi decreases between r = {} and r = {}", grid[i], grid[i + 1]);
        h1.violation = Some((grid[i], grid[i + 1]));
    } else {
        let found = extrapolate_limit([phi[n - 3], phi[n - 2], phi[n - 1]], false);
        if !limits_agree(found, spec.kappa, phi[n - 1].abs()) {
            h1.passed = false;
            h1.detail = format!("phi tends to {found}, kappa = {}", spec.kappa);
        } else {
            h1.detail = format!("ell = {}, kappa = {}", spec.ell, spec.kappa);
        }
    }
    checks.push(h1);

    // (h2): f(s)/s strictly increasing.
    let q: Vec<f64> = grid
        .iter()
        .map(|&s| spec.nonlinearity.eval(s) / s)
        .collect();
    let mut h2 = HypothesisCheck {
        name: "h2",
        passed: true,
        detail: "f(s)/s strictly increasing on samples".into(),
        violation: None,
    };
    for i in 0..n - 1 {
        let (a, b) = (q[i], q[i + 1]);
        let saturated = (a == b) && (a == 0.0 || a == f64::INFINITY);
        if saturated {
            continue;
        }
        if !(b > a) {
            h2.passed = false;
            h2.detail = format!(
                "f(s)/s not increasing between s = {} and s = {}",
                grid[i],
                grid[i + 1]
            );
            h2.violation = Some((grid[i], grid[i + 1]));
            break;
        }
    }
    checks.push(h2);

    // (h3): f(s)/s → 1/ℓ as s → ∞.
    let expected_inf = Limit::Finite(spec.ell).reciprocal();
    let found_inf = extrapolate_limit([q[n - 3], q[n - 2], q[n - 1]], false);
    checks.push(HypothesisCheck {
        name: "h3",
        passed: limits_agree(found_inf, expected_inf, 1.0),
        detail: format!("f(s)/s tends to {found_inf} at infinity, 1/ell = {expected_inf}"),
        violation: None,
    });

    // (h4): f(s)/s → 1/κ as s → 0+.
    let expected_zero = spec.kappa.reciprocal();
    let found_zero = extrapolate_limit([q[0], q[1], q[2]], true);
    checks.push(HypothesisCheck {
        name: "h4",
        passed: limits_agree(found_zero, expected_zero, q[0].abs()),
        detail: format!("f(s)/s tends to {found_zero} at 0+, 1/kappa = {expected_zero}"),
        violation: None,
    });

    HypothesisReport { checks }
}
