//! Scripted runs over the bundled manifests.
//!
//! A manifest is a flat key-value file (see [`crate::config`]) whose `id`
//! selects the experiment. Comparisons within tolerance pass, within twice
//! the tolerance warn, and fail beyond that.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::analysis::{check_monotone, check_neumann, CheckStatus};
use crate::config::{parse_real, KvConfig};
use crate::error::{Error, Result};
use crate::export::{fmt17, trajectory_csv, write_atomic};
use crate::integrator::{integrate, IntegratorOptions};
use crate::problem::{GeneralSpec, HenonSpec, Nonlinearity, ProblemSpec, Weight};
use crate::shooting::{shoot_with, ShootOptions, ShootingResult};

pub const EXPERIMENT_IDS: [&str; 4] = ["table", "oscillations", "pbar", "general"];

const TABLE: &str = include_str!("../manifests/table.manifest");
const OSCILLATIONS: &str = include_str!("../manifests/oscillations.manifest");
const PBAR: &str = include_str!("../manifests/pbar.manifest");
const GENERAL: &str = include_str!("../manifests/general.manifest");

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentManifest {
    pub id: String,
    pub config: KvConfig,
}

impl ExperimentManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let config = KvConfig::parse(text)?;
        let id = config
            .get("id")
            .ok_or_else(|| Error::InvalidInput("manifest has no `id`".into()))?
            .to_string();
        if !EXPERIMENT_IDS.contains(&id.as_str()) {
            return Err(Error::InvalidInput(format!(
                "unknown experiment `{id}` (expected one of {})",
                EXPERIMENT_IDS.join(", ")
            )));
        }
        Ok(ExperimentManifest { id, config })
    }

    pub fn builtin(id: &str) -> Result<Self> {
        let text = match id {
            "table" => TABLE,
            "oscillations" => OSCILLATIONS,
            "pbar" => PBAR,
            "general" => GENERAL,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown experiment `{other}` (expected one of {})",
                    EXPERIMENT_IDS.join(", ")
                )))
            }
        };
        Self::parse(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn real(&self, key: &str) -> Result<f64> {
        self.config
            .get_real(key)?
            .ok_or_else(|| Error::InvalidInput(format!("manifest `{}` lacks `{key}`", self.id)))
    }

    fn real_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.config.get_real(key)?.unwrap_or(default))
    }

    fn uint(&self, key: &str) -> Result<u64> {
        self.config
            .get_uint(key)?
            .ok_or_else(|| Error::InvalidInput(format!("manifest `{}` lacks `{key}`", self.id)))
    }

    fn source(&self) -> String {
        self.config.get("source").unwrap_or("").to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
        }
    }

    /// Pass within `tol`, warn within `2 tol`, fail otherwise.
    pub fn grade(rel_error: f64, tol: f64) -> Self {
        if rel_error <= tol {
            Verdict::Pass
        } else if rel_error <= 2.0 * tol {
            Verdict::Warn
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expected {
    /// A value with a relative tolerance.
    Value { value: f64, rel_tol: f64 },
    Range { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub label: String,
    pub expected: Expected,
    pub computed: Option<f64>,
    pub rel_error: Option<f64>,
    pub verdict: Verdict,
    pub source: String,
    pub note: String,
}

impl Comparison {
    fn value(label: String, expected: f64, rel_tol: f64, computed: Option<f64>, source: String) -> Self {
        let rel_error = computed.map(|c| (c - expected).abs() / expected.abs());
        let verdict = rel_error.map_or(Verdict::Fail, |e| Verdict::grade(e, rel_tol));
        Comparison {
            label,
            expected: Expected::Value { value: expected, rel_tol },
            computed,
            rel_error,
            verdict,
            source,
            note: String::new(),
        }
    }

    fn range(label: String, lo: f64, hi: f64, computed: Option<f64>, source: String) -> Self {
        let verdict = match computed {
            Some(c) if (lo..=hi).contains(&c) => Verdict::Pass,
            _ => Verdict::Fail,
        };
        Comparison {
            label,
            expected: Expected::Range { lo, hi },
            computed,
            rel_error: None,
            verdict,
            source,
            note: String::new(),
        }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    fn fail(mut self, why: impl Into<String>) -> Self {
        self.verdict = Verdict::Fail;
        self.note = why.into();
        self
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub id: String,
    pub comparisons: Vec<Comparison>,
    /// Converged solutions, in manifest order, where the experiment shoots.
    pub solutions: Vec<Option<ShootingResult>>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    /// True iff every comparison is within tolerance.
    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,expected,tolerance,computed,rel_error,verdict,source,note\n");
        for c in &self.comparisons {
            let (expected, tol) = match c.expected {
                Expected::Value { value, rel_tol } => (fmt17(value), fmt17(rel_tol)),
                Expected::Range { lo, hi } => (format!("[{lo} {hi}]"), String::new()),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.label,
                expected,
                tol,
                c.computed.map(fmt17).unwrap_or_default(),
                c.rel_error.map(fmt17).unwrap_or_default(),
                c.verdict.as_str(),
                c.source,
                c.note.replace(',', ";")
            ));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("experiment {}\n", self.id);
        for c in &self.comparisons {
            let expected = match c.expected {
                Expected::Value { value, rel_tol } => format!("{value} (rel {rel_tol:.0e})"),
                Expected::Range { lo, hi } => format!("in [{lo}, {hi}]"),
            };
            let computed = c.computed.map(|x| format!("{x:.10}")).unwrap_or_else(|| "-".into());
            let rel = c.rel_error.map(|e| format!("{e:.2e}")).unwrap_or_default();
            out.push_str(&format!(
                "  {:<4} {:<24} expected {:<22} computed {:<14} {:>9}  {}\n",
                c.verdict.as_str(),
                c.label,
                expected,
                computed,
                rel,
                c.note
            ));
        }
        out.push_str(if self.passed() { "result: pass\n" } else { "result: fail\n" });
        out
    }

    fn save(&mut self, out_dir: Option<&Path>, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = out_dir {
            let path = dir.join(name);
            write_atomic(&path, contents.as_bytes())?;
            self.files.push(path);
        }
        Ok(())
    }
}

fn fields<'a>(line: &'a str, want: usize, what: &str) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() < want {
        return Err(Error::Parse(format!(
            "{what} `{line}`: expected at least {want} fields"
        )));
    }
    Ok(parts)
}

fn parse_uint(text: &str) -> Result<u64> {
    text.parse()
        .map_err(|_| Error::Parse(format!("expected an integer, got `{text}`")))
}

/// A manifest row of the γ* table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub dim: u32,
    pub alpha: f64,
    pub p: f64,
    pub n: usize,
    pub expected: f64,
    pub source: String,
}

impl TableEntry {
    pub fn spec(&self) -> Result<ProblemSpec> {
        Ok(HenonSpec::new(self.dim, self.alpha, self.p)?.into())
    }

    pub fn label(&self) -> String {
        format!("N={} alpha={} p={} n={}", self.dim, self.alpha, fmt_p(self.p), self.n)
    }
}

fn fmt_p(p: f64) -> String {
    format!("{}", (p * 1e6).round() / 1e6)
}

pub fn table_entries(manifest: &ExperimentManifest) -> Result<Vec<TableEntry>> {
    manifest
        .config
        .get_all("row")
        .map(|line| {
            let f = fields(line, 5, "row")?;
            Ok(TableEntry {
                dim: parse_uint(f[0])? as u32,
                alpha: parse_real(f[1])?,
                p: parse_real(f[2])?,
                n: parse_uint(f[3])? as usize,
                expected: parse_real(f[4])?,
                source: f.get(5).unwrap_or(&"").to_string(),
            })
        })
        .collect()
}

fn error_note(e: &Error) -> String {
    format!("error: {e}")
}

/// Shoots every table row (rows run concurrently) and compares `γ*`.
pub fn exp_table(manifest: &ExperimentManifest, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    let tolerance = manifest.real("tolerance")?;
    let tol = manifest.real_or("tol", 1e-6)?;
    let entries = table_entries(manifest)?;
    if entries.is_empty() {
        return Err(Error::InvalidInput("table manifest has no rows".into()));
    }
    let specs = entries.iter().map(TableEntry::spec).collect::<Result<Vec<_>>>()?;
    let opts = ShootOptions::default();
    let results: Vec<Result<ShootingResult>> = entries
        .par_iter()
        .zip(specs.par_iter())
        .map(|(e, s)| shoot_with(s, e.n, tol, &opts))
        .collect();

    let mut comparisons = Vec::with_capacity(entries.len());
    let mut solutions = Vec::with_capacity(entries.len());
    for (e, res) in entries.iter().zip(results) {
        let c = Comparison::value(e.label(), e.expected, tolerance, None, e.source.clone());
        match res {
            Ok(r) => {
                let c = Comparison::value(e.label(), e.expected, tolerance, Some(r.gamma_star), e.source.clone())
                    .note(format!("residual {:.1e}", r.residual));
                comparisons.push(c);
                solutions.push(Some(r));
            }
            Err(err) => {
                comparisons.push(c.fail(error_note(&err)));
                solutions.push(None);
            }
        }
    }
    let mut report = ExperimentReport {
        id: manifest.id.clone(),
        comparisons,
        solutions,
        files: Vec::new(),
    };
    let csv = report.to_csv();
    report.save(out_dir, "table.csv", &csv)?;
    Ok(report)
}

fn manifest_henon(manifest: &ExperimentManifest, p: f64) -> Result<ProblemSpec> {
    let dim = manifest.uint("N")? as u32;
    Ok(HenonSpec::new(dim, manifest.real("alpha")?, p)?.into())
}

/// Solves `R^n = 1` for each target index and writes one trajectory per
/// converged solution.
pub fn exp_oscillations(manifest: &ExperimentManifest, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    let spec = manifest_henon(manifest, manifest.real("p")?)?;
    let tol = manifest.real_or("tol", 1e-6)?;
    let defaults = ShootOptions::default();
    let opts = ShootOptions {
        gamma_min: manifest.real_or("gamma_min", defaults.gamma_min)?,
        gamma_max: manifest.real_or("gamma_max", defaults.gamma_max)?,
        points: manifest.config.get_uint("points")?.map_or(defaults.points, |v| v as usize),
        r_max: manifest.real_or("r_max", defaults.r_max)?,
        ..defaults
    };
    let targets = manifest
        .config
        .get_all("target")
        .map(|line| {
            let f = fields(line, 3, "target")?;
            Ok((
                parse_uint(f[0])? as usize,
                parse_real(f[1])?,
                parse_real(f[2])?,
                f.get(3).unwrap_or(&"").to_string(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<ShootingResult>> = targets
        .par_iter()
        .map(|(n, ..)| shoot_with(&spec, *n, tol, &opts))
        .collect();

    let mut report = ExperimentReport {
        id: manifest.id.clone(),
        comparisons: Vec::new(),
        solutions: Vec::new(),
        files: Vec::new(),
    };
    for ((n, expected, rel_tol, source), res) in targets.into_iter().zip(results) {
        let label = format!("n={n}");
        match res {
            Ok(r) => {
                report.comparisons.push(
                    Comparison::value(label, expected, rel_tol, Some(r.gamma_star), source)
                        .note(format!("R = {:.9}", r.achieved_r)),
                );
                let traj = integrate(&spec, r.gamma_star, opts.r_max, &opts.tight);
                report.save(out_dir, &format!("oscillations_n{n}.csv"), &trajectory_csv(&traj, None))?;
                report.solutions.push(Some(r));
            }
            Err(err) => {
                report
                    .comparisons
                    .push(Comparison::value(label, expected, rel_tol, None, source).fail(error_note(&err)));
                report.solutions.push(None);
            }
        }
    }
    let csv = report.to_csv();
    report.save(out_dir, "oscillations.csv", &csv)?;
    Ok(report)
}

/// Stationary-point counts in `[skip_below, r_max]` across the `p` sweep.
pub fn pbar_counts(manifest: &ExperimentManifest) -> Result<Vec<(f64, usize)>> {
    let gamma = manifest.real("gamma")?;
    let (p_min, p_max, step) = (manifest.real("p_min")?, manifest.real("p_max")?, manifest.real("p_step")?);
    let r_max = manifest.real("r_max")?;
    let skip_below = manifest.real_or("skip_below", 0.0)?;
    if !(step > 0.0 && p_max >= p_min) {
        return Err(Error::InvalidInput("p sweep needs p_step > 0 and p_max >= p_min".into()));
    }
    let count = ((p_max - p_min) / step + 1e-9).floor() as usize + 1;
    let ps: Vec<f64> = (0..count).map(|i| p_min + i as f64 * step).collect();
    let specs = ps.iter().map(|&p| manifest_henon(manifest, p)).collect::<Result<Vec<_>>>()?;
    let opts = IntegratorOptions::default();
    Ok(ps
        .par_iter()
        .zip(specs.par_iter())
        .map(|(&p, spec)| {
            let traj = integrate(spec, gamma, r_max, &opts);
            let k = traj.stationary_radii().iter().filter(|&&r| r >= skip_below).count();
            (p, k)
        })
        .collect())
}

/// Largest `p` with at least `min_count` stationary points.
pub fn pbar_estimate(counts: &[(f64, usize)], min_count: usize) -> Option<f64> {
    counts.iter().filter(|(_, k)| *k >= min_count).map(|(p, _)| *p).reduce(f64::max)
}

pub fn exp_pbar(manifest: &ExperimentManifest, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    let min_count = manifest.uint("min_count")? as usize;
    let (lo, hi) = (manifest.real("expected_min")?, manifest.real("expected_max")?);
    let counts = pbar_counts(manifest)?;
    let estimate = pbar_estimate(&counts, min_count);
    let c = Comparison::range("pbar".into(), lo, hi, estimate, manifest.source())
        .note(format!("first p with fewer than {min_count}: {}", first_below(&counts, min_count)));
    let mut report = ExperimentReport {
        id: manifest.id.clone(),
        comparisons: vec![c],
        solutions: Vec::new(),
        files: Vec::new(),
    };
    let mut csv = String::from("p,stationary_count\n");
    for (p, k) in &counts {
        csv.push_str(&format!("{},{k}\n", fmt17(*p)));
    }
    report.save(out_dir, "pbar_counts.csv", &csv)?;
    let summary = report.to_csv();
    report.save(out_dir, "pbar.csv", &summary)?;
    Ok(report)
}

fn first_below(counts: &[(f64, usize)], min_count: usize) -> String {
    counts
        .iter()
        .find(|(_, k)| *k < min_count)
        .map_or_else(|| "none".into(), |(p, _)| p.to_string())
}

/// A `case` row of the general manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralCase {
    pub dim: u32,
    pub weight_power: f64,
    pub coefficient: f64,
    pub q: f64,
    pub expected: f64,
    pub source: String,
}

impl GeneralCase {
    pub fn spec(&self) -> Result<ProblemSpec> {
        Ok(GeneralSpec::new(
            self.dim,
            Weight::Power { alpha: self.weight_power },
            Nonlinearity::Exp { gamma: self.coefficient, q: self.q },
        )?
        .into())
    }
}

pub fn general_cases(manifest: &ExperimentManifest) -> Result<Vec<GeneralCase>> {
    manifest
        .config
        .get_all("case")
        .map(|line| {
            let f = fields(line, 6, "case")?;
            if f[2] != "exp" {
                return Err(Error::InvalidInput(format!(
                    "case `{line}`: only the exp nonlinearity is scriptable"
                )));
            }
            Ok(GeneralCase {
                dim: parse_uint(f[0])? as u32,
                weight_power: parse_real(f[1])?,
                coefficient: parse_real(f[3])?,
                q: parse_real(f[4])?,
                expected: parse_real(f[5])?,
                source: f.get(6).unwrap_or(&"").to_string(),
            })
        })
        .collect()
}

pub fn exp_general(manifest: &ExperimentManifest, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    let tol = manifest.real_or("tol", 1e-6)?;
    let tolerance = manifest.real("tolerance")?;
    let cases = general_cases(manifest)?;
    let specs = cases.iter().map(GeneralCase::spec).collect::<Result<Vec<_>>>()?;
    let opts = ShootOptions::default();
    let results: Vec<Result<ShootingResult>> = specs.par_iter().map(|s| shoot_with(s, 1, tol, &opts)).collect();

    let mut report = ExperimentReport {
        id: manifest.id.clone(),
        comparisons: Vec::new(),
        solutions: Vec::new(),
        files: Vec::new(),
    };
    for (i, (case, res)) in cases.iter().zip(results).enumerate() {
        let label = format!("N={} phi=r^{} exp(s^{})-1", case.dim, case.weight_power, case.q);
        match res {
            Ok(r) => {
                let mut c = Comparison::value(label, case.expected, tolerance, Some(r.gamma_star), case.source.clone());
                let monotone = check_monotone(&r.trajectory);
                let neumann = check_neumann(&r.trajectory);
                let mut problems = Vec::new();
                if r.residual >= tol {
                    problems.push(format!("residual {:.1e}", r.residual));
                }
                if monotone.status != CheckStatus::Pass {
                    problems.push(format!("monotone {}", monotone.status.as_str()));
                }
                if neumann.status != CheckStatus::Pass {
                    problems.push(format!("neumann {}", neumann.status.as_str()));
                }
                c = if problems.is_empty() {
                    c.note(format!("residual {:.1e}; increasing; u'(1) = {:.1e}", r.residual, r.derivative_at_one))
                } else {
                    c.fail(problems.join("; "))
                };
                report.comparisons.push(c);
                report.save(out_dir, &format!("general_case{}.csv", i + 1), &trajectory_csv(&r.trajectory, None))?;
                report.solutions.push(Some(r));
            }
            Err(err) => {
                report.comparisons.push(
                    Comparison::value(label, case.expected, tolerance, None, case.source.clone()).fail(error_note(&err)),
                );
                report.solutions.push(None);
            }
        }
    }

    if let Some(line) = manifest.config.get("crosscheck") {
        let f = fields(line, 3, "crosscheck")?;
        let henon = HenonSpec::new(parse_uint(f[0])? as u32, parse_real(f[1])?, parse_real(f[2])?)?;
        let cross_tol = manifest.real_or("crosscheck_tolerance", 1e-8)?;
        let general: ProblemSpec = henon.as_general().into();
        let henon: ProblemSpec = henon.into();
        let label = format!("crosscheck {}", henon.label());
        let (a, b) = rayon::join(|| shoot_with(&henon, 1, tol, &opts), || shoot_with(&general, 1, tol, &opts));
        let c = match (a, b) {
            (Ok(a), Ok(b)) => Comparison::value(label, a.gamma_star, cross_tol, Some(b.gamma_star), "derived".into())
                .note("general pathway vs specialized pathway"),
            (Err(e), _) | (_, Err(e)) => {
                Comparison::value(label, 1.0, cross_tol, None, "derived".into()).fail(error_note(&e))
            }
        };
        report.comparisons.push(c);
    }
    let csv = report.to_csv();
    report.save(out_dir, "general.csv", &csv)?;
    Ok(report)
}

/// Runs the experiment named by the manifest, writing its files into
/// `out_dir` when given.
pub fn run(manifest: &ExperimentManifest, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    match manifest.id.as_str() {
        "table" => exp_table(manifest, out_dir),
        "oscillations" => exp_oscillations(manifest, out_dir),
        "pbar" => exp_pbar(manifest, out_dir),
        "general" => exp_general(manifest, out_dir),
        other => Err(Error::InvalidInput(format!("unknown experiment `{other}`"))),
    }
}
