//! Shooting on the initial value `γ = u(0)`.
//!
//! `R^n_γ` denotes the radius of the `n`-th stationary point of the
//! trajectory started at `γ`. A Neumann solution on the unit ball is a `γ`
//! with `R^n_γ = 1`. For `n = 1` such a `γ` always exists: `R^1_γ > 1` for
//! small `γ` and `R^1_γ → 0` as `γ → ∞`, and `γ ↦ R^1_γ` is continuous.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegratorOptions, Termination, Trajectory};
use crate::problem::{log_grid, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Tolerances used while scanning and bisecting.
    pub integrator: IntegratorOptions,
    /// Tolerances for the final re-integration.
    pub tight: IntegratorOptions,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub points: usize,
    pub r_max: f64,
    /// Range limits for extending an `n = 1` scan that shows no sign change.
    pub extend_min: f64,
    pub extend_max: f64,
    pub max_bisections: usize,
    /// The returned trajectory covers `[0, 1 + margin]`.
    pub margin: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        let integrator = IntegratorOptions::default();
        ShootOptions {
            integrator,
            tight: integrator.with_tolerance(1e-12),
            gamma_min: 1e-2,
            gamma_max: 1e4,
            points: 64,
            r_max: 10.0,
            extend_min: 1e-8,
            extend_max: 1e8,
            max_bisections: 200,
            margin: 0.1,
        }
    }
}

/// One row of a [`GammaScan`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub gamma: f64,
    pub stationary: Vec<f64>,
    pub termination: Termination,
}

impl ScanRecord {
    /// `R^n` (1-based), if the trajectory had `n` stationary points.
    pub fn radius(&self, n: usize) -> Option<f64> {
        self.stationary.get(n.checked_sub(1)?).copied()
    }
}

/// Sampled map `γ ↦ (R^1_γ, R^2_γ, …)` on a log-spaced grid.
#[derive(Debug, Clone)]
pub struct GammaScan {
    pub spec: ProblemSpec,
    pub r_max: f64,
    pub gammas: Vec<f64>,
    pub records: Vec<ScanRecord>,
}

impl GammaScan {
    pub fn max_stationary_count(&self) -> usize {
        self.records.iter().map(|r| r.stationary.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub gamma_star: f64,
    pub n: usize,
    pub achieved_r: f64,
    /// `|achieved_r - 1|`
    pub residual: f64,
    /// Re-integrated at the tight tolerances on `[0, 1 + margin]`.
    pub trajectory: Trajectory,
    pub bracket: (f64, f64),
    pub bisections: usize,
    /// `|R^n|` re-integrated at a tenth of the tight tolerance, minus the
    /// reported `R^n` (NaN when the finer trajectory has no `R^n`).
    pub refinement_shift: f64,
    /// `u'(1)` on the returned trajectory.
    pub derivative_at_one: f64,
    pub value_at_one: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "gamma must be positive (got {gamma})"
        )))
    }
}

/// `R^1_γ`, integrating on `[0, 10]` and doubling `r_max` up to `1e4`
/// until a stationary point appears. `None` when the trajectory ends by
/// blow-up or positivity loss first (or never turns within `1e4`).
pub fn first_stationary_map(
    spec: &ProblemSpec,
    gamma: f64,
    opts: &IntegratorOptions,
) -> Result<Option<f64>> {
    check_gamma(gamma)?;
    let mut r_max: f64 = 10.0;
    loop {
        let traj = integrate(spec, gamma, r_max, opts);
        if let Some(r) = traj.nth_stationary(1) {
            return Ok(Some(r));
        }
        match traj.termination {
            Termination::StepFailure => {
                return Err(Error::Undetermined {
                    gamma,
                    r: traj.r_end(),
                })
            }
            Termination::BlowUp | Termination::PositivityLoss => return Ok(None),
            Termination::ReachedRMax => {}
        }
        if r_max >= 1e4 {
            return Ok(None);
        }
        r_max = (2.0 * r_max).min(1e4);
    }
}

/// `R^n_γ` within `[0, r_max]`.
pub fn nth_stationary_map(
    spec: &ProblemSpec,
    gamma: f64,
    n: usize,
    r_max: f64,
    opts: &IntegratorOptions,
) -> Result<Option<f64>> {
    check_gamma(gamma)?;
    if n == 0 {
        return Err(Error::InvalidInput("stationary index n must be at least 1".into()));
    }
    let traj = integrate(spec, gamma, r_max, opts);
    match traj.nth_stationary(n) {
        Some(r) => Ok(Some(r)),
        None if traj.termination == Termination::StepFailure => Err(Error::Undetermined {
            gamma,
            r: traj.r_end(),
        }),
        None => Ok(None),
    }
}

fn scan_record(spec: &ProblemSpec, gamma: f64, r_max: f64, opts: &IntegratorOptions) -> ScanRecord {
    let traj = integrate(spec, gamma, r_max, opts);
    ScanRecord {
        gamma,
        stationary: traj.stationary_radii(),
        termination: traj.termination,
    }
}

/// Integrates every `γ` of a log-spaced grid (in parallel) and records all
/// stationary radii up to `r_max`.
pub fn scan(
    spec: &ProblemSpec,
    gamma_min: f64,
    gamma_max: f64,
    points: usize,
    r_max: f64,
    opts: &IntegratorOptions,
) -> Result<GammaScan> {
    if !(gamma_min > 0.0 && gamma_max > gamma_min) {
        return Err(Error::InvalidInput(format!(
            "scan needs 0 < gamma_min < gamma_max (got {gamma_min}, {gamma_max})"
        )));
    }
    if points < 2 {
        return Err(Error::InvalidInput("scan needs at least 2 points".into()));
    }
    if !(r_max > 0.0) {
        return Err(Error::InvalidInput("r_max must be positive".into()));
    }
    let gammas = log_grid(gamma_min, gamma_max, points);
    let records = gammas
        .par_iter()
        .map(|&g| scan_record(spec, g, r_max, opts))
        .collect();
    Ok(GammaScan {
        spec: spec.clone(),
        r_max,
        gammas,
        records,
    })
}

/// Sign of `R^n - 1` for bracketing. A missing `R^1` counts as `+∞`;
/// a missing `R^n` for `n > 1` has no sign.
fn side(n: usize, radius: Option<f64>) -> Option<bool> {
    match radius {
        Some(r) => Some(r > 1.0),
        None if n == 1 => Some(true),
        None => None,
    }
}

fn first_sign_change(n: usize, records: &[ScanRecord]) -> Option<(f64, f64)> {
    records.windows(2).find_map(|w| {
        let a = side(n, w[0].radius(n))?;
        let b = side(n, w[1].radius(n))?;
        (a != b).then_some((w[0].gamma, w[1].gamma))
    })
}

/// Consecutive `γ` values between which `R^n_γ - 1` changes sign.
///
/// For `n = 1` a scan without a sign change is extended by decades below
/// its smallest and above its largest `γ`, up to `opts.extend_min` and
/// `opts.extend_max`.
pub fn bracket_target(
    spec: &ProblemSpec,
    n: usize,
    scan: &GammaScan,
    opts: &ShootOptions,
) -> Result<(f64, f64)> {
    bracket_with(spec, n, scan, opts, &opts.integrator)
}

fn bracket_with(
    spec: &ProblemSpec,
    n: usize,
    scan: &GammaScan,
    opts: &ShootOptions,
    integ: &IntegratorOptions,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidInput("stationary index n must be at least 1".into()));
    }
    if let Some(b) = first_sign_change(n, &scan.records) {
        return Ok(b);
    }
    if n != 1 || scan.records.is_empty() {
        return Err(Error::NoBracket { n });
    }

    let r1 = |g: f64| -> Result<bool> {
        Ok(side(1, first_stationary_map(spec, g, integ)?).unwrap_or(true))
    };
    let first = &scan.records[0];
    let last = &scan.records[scan.records.len() - 1];
    let (mut lo, mut lo_side) = (first.gamma, side(1, first.radius(1)).unwrap_or(true));
    let (mut hi, mut hi_side) = (last.gamma, side(1, last.radius(1)).unwrap_or(true));
    loop {
        let mut progressed = false;
        if lo / 10.0 >= opts.extend_min * (1.0 - 1e-12) {
            let g = lo / 10.0;
            let s = r1(g)?;
            if s != lo_side {
                return Ok((g, lo));
            }
            lo = g;
            lo_side = s;
            progressed = true;
        }
        if hi * 10.0 <= opts.extend_max * (1.0 + 1e-12) {
            let g = hi * 10.0;
            let s = r1(g)?;
            if s != hi_side {
                return Ok((hi, g));
            }
            hi = g;
            hi_side = s;
            progressed = true;
        }
        if !progressed {
            return Err(Error::NoBracket { n });
        }
    }
}

struct Probe {
    radius: Option<f64>,
    u1: Option<(f64, f64)>,
}

fn probe(spec: &ProblemSpec, gamma: f64, n: usize, r_max: f64, opts: &IntegratorOptions) -> Result<Probe> {
    // For n = 1 only the side of 1 matters, and a missing R^1 counts as +∞.
    let reach = if n == 1 { r_max.min(1.1) } else { r_max };
    let traj = integrate(spec, gamma, reach.max(1.0), opts);
    let radius = traj.nth_stationary(n);
    if radius.is_none() && traj.termination == Termination::StepFailure {
        return Err(Error::Undetermined {
            gamma,
            r: traj.r_end(),
        });
    }
    Ok(Probe {
        radius,
        u1: traj.eval(1.0),
    })
}

fn converged(p: &Probe, tol: f64) -> bool {
    match (p.radius, p.u1) {
        (Some(r), Some((u, v))) => (r - 1.0).abs() < tol && v.abs() < tol * u.abs().max(1.0),
        _ => false,
    }
}

/// Bisects on `γ` in `[lo, hi]` (signs `lo_side`, `!lo_side`).
#[allow(clippy::too_many_arguments)]
fn bisect(
    spec: &ProblemSpec,
    n: usize,
    tol: f64,
    bracket: (f64, f64),
    lo_side: bool,
    r_max: f64,
    integ: &IntegratorOptions,
    max_iter: usize,
    count: &mut usize,
) -> Result<(f64, (f64, f64), Probe)> {
    let (mut lo, mut hi) = bracket;
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        *count += 1;
        let p = probe(spec, mid, n, r_max, integ)?;
        if converged(&p, tol) {
            return Ok((mid, (lo, hi), p));
        }
        let s = side(n, p.radius).ok_or_else(|| {
            Error::TargetLost(format!(
                "R^{n} missing at gamma = {mid} inside bracket [{lo}, {hi}]"
            ))
        })?;
        if s == lo_side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NotConverged(format!(
        "bracket [{lo}, {hi}] collapsed without |R^{n} - 1| < {tol}"
    )))
}

/// Solves `R^n_γ = 1` with [`ShootOptions::default`].
pub fn shoot(spec: &ProblemSpec, n: usize, tol: f64) -> Result<ShootingResult> {
    shoot_with(spec, n, tol, &ShootOptions::default())
}

struct Solved {
    gamma: f64,
    bracket: (f64, f64),
    probe: Probe,
    bisections: usize,
}

/// Scan, bracket and bisection, all at the tolerances of `integ`.
fn solve_at(spec: &ProblemSpec, n: usize, tol: f64, opts: &ShootOptions, integ: &IntegratorOptions) -> Result<Solved> {
    let grid = scan(spec, opts.gamma_min, opts.gamma_max, opts.points, opts.r_max, integ)?;
    let bracket = bracket_with(spec, n, &grid, opts, integ)?;
    let lo_probe = probe(spec, bracket.0, n, opts.r_max, integ)?;
    let lo_side = side(n, lo_probe.radius).ok_or_else(|| {
        Error::TargetLost(format!("R^{n} missing at bracket end gamma = {}", bracket.0))
    })?;
    let mut bisections = 0;
    let (gamma, bracket, probe) = bisect(
        spec,
        n,
        tol,
        bracket,
        lo_side,
        opts.r_max,
        integ,
        opts.max_bisections,
        &mut bisections,
    )?;
    Ok(Solved { gamma, bracket, probe, bisections })
}

/// Scans, brackets, and bisects until `|R^n_γ - 1| < tol` and
/// `|u'(1)| < tol · max(1, |u(1)|)`.
///
/// The search runs at the working tolerances first. If it fails, or its
/// answer does not hold up when re-integrated at the tight tolerances, the
/// whole search is repeated at the tight tolerances. Large `γ` (higher
/// stationary indices) typically need the second pass.
pub fn shoot_with(spec: &ProblemSpec, n: usize, tol: f64, opts: &ShootOptions) -> Result<ShootingResult> {
    if !(tol >= 1e-9) {
        return Err(Error::InvalidInput(format!(
            "tolerance must be at least 1e-9 (got {tol})"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("stationary index n must be at least 1".into()));
    }
    let confirmed = match solve_at(spec, n, tol, opts, &opts.integrator) {
        Ok(s) => {
            let tight = probe(spec, s.gamma, n, opts.r_max, &opts.tight)?;
            converged(&tight, tol).then_some(Solved { probe: tight, ..s })
        }
        Err(Error::NoBracket { .. } | Error::TargetLost(_) | Error::NotConverged(_)) => None,
        Err(e) => return Err(e),
    };
    let solved = match confirmed {
        Some(s) => s,
        None => solve_at(spec, n, tol, opts, &opts.tight)?,
    };

    let gamma = solved.gamma;
    let achieved_r = solved.probe.radius.expect("converged probe has a radius");
    let finer = opts.tight.with_tolerance(opts.tight.rel_tol / 10.0);
    let refinement_shift = probe(spec, gamma, n, opts.r_max, &finer)?
        .radius
        .map_or(f64::NAN, |r| (r - achieved_r).abs());

    let trajectory = integrate(spec, gamma, 1.0 + opts.margin, &opts.tight);
    let (value_at_one, derivative_at_one) = trajectory.eval(1.0).unwrap_or((f64::NAN, f64::NAN));
    Ok(ShootingResult {
        gamma_star: gamma,
        n,
        achieved_r,
        residual: (achieved_r - 1.0).abs(),
        trajectory,
        bracket: solved.bracket,
        bisections: solved.bisections,
        refinement_shift,
        derivative_at_one,
        value_at_one,
    })
}
