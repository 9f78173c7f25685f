//! Command-line front end.
//!
//! Every subcommand reads problem parameters from an optional flat config
//! file (`--config`) and then from flags, which take precedence. All inputs
//! are validated before any computation, and output files are only written
//! once everything they contain has been computed.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::analysis::{check_lemma45_trend, full_suite, CHECK_NAMES};
use crate::config::{parse_real, KvConfig};
use crate::error::{Error, Result};
use crate::experiments::{self, table_entries, ExperimentManifest};
use crate::export::{self, sidecar, to_json_text, write_atomic, TableRow};
use crate::integrator::{integrate, IntegratorOptions, Trajectory};
use crate::problem::{HenonSpec, ProblemSpec};
use crate::shooting::{scan, shoot_with, ShootOptions};

#[derive(Debug, Parser)]
#[command(name = "henon", version, about = "Shooting solver for radial Neumann problems -Δu + u = φ(|x|) f(u) on the unit ball")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve R^n(γ) = 1 for γ and report the Neumann solution.
    Solve(SolveArgs),
    /// Integrate from a given γ and write trajectory and event files.
    Trace(TraceArgs),
    /// Record the stationary radii over a log-spaced γ grid.
    Scan(ScanArgs),
    /// Solve a list of (N, alpha, p, n) rows.
    Table(TableArgs),
    /// Run the diagnostic checks on a solution or a stored trajectory.
    Verify(VerifyArgs),
    /// Bundled experiments.
    Experiments {
        #[command(subcommand)]
        action: ExperimentsCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExperimentsCommand {
    /// Run one experiment (table, oscillations, pbar, general).
    Run {
        id: String,
        /// Output directory for comparison and data files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use this manifest instead of the bundled one.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// List the bundled experiments.
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Problem parameters. Reals accept rationals such as `25/3`.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Space dimension N.
    #[arg(long = "N")]
    pub dim: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<String>,
    /// Second weight exponent, for φ(r) = r^alpha + r^beta.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// `power` or `exp`; omit for the Hénon problem.
    #[arg(long)]
    pub nonlinearity: Option<String>,
    /// Coefficient c of f(s) = exp(c s^q) - 1.
    #[arg(long = "exp-gamma", allow_hyphen_values = true)]
    pub exp_gamma: Option<String>,
    /// Exponent q of f(s) = exp(c s^q) - 1.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Index of the stationary point placed at r = 1.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rmax: Option<String>,
    #[arg(long = "gamma-min", allow_hyphen_values = true)]
    pub gamma_min: Option<String>,
    #[arg(long = "gamma-max", allow_hyphen_values = true)]
    pub gamma_max: Option<String>,
    #[arg(long)]
    pub points: Option<String>,
    /// Format of the trajectory sidecar files.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Result JSON path; trajectory and events are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Initial value u(0).
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rmax: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<String>,
    /// Drop nodes with r below this value from the trajectory output.
    #[arg(long = "skip-below", allow_hyphen_values = true)]
    pub skip_below: Option<String>,
    /// Comma-separated p values; one trajectory per value.
    #[arg(long = "p-sweep")]
    pub p_sweep: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Trajectory path; events go to `<stem>.events.<ext>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long = "gamma-min", allow_hyphen_values = true)]
    pub gamma_min: Option<String>,
    #[arg(long = "gamma-max", allow_hyphen_values = true)]
    pub gamma_max: Option<String>,
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rmax: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    /// File of rows `N alpha p [n]`; defaults to the bundled table.
    #[arg(long)]
    pub rows: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Initial value u(0) of the trajectory to check.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Trajectory CSV (`r,u,uprime`) to check instead of integrating.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Run only the named check; repeatable.
    #[arg(long = "check")]
    pub checks: Vec<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rmax: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Config file entries overlaid with the given flags.
fn settings(spec: &SpecArgs, extra: &[(&str, &Option<String>)]) -> Result<KvConfig> {
    let mut cfg = match &spec.config {
        Some(path) => KvConfig::load(path).map_err(|e| match e {
            Error::Io(io) => Error::InvalidInput(format!("cannot read config {}: {io}", path.display())),
            other => other,
        })?,
        None => KvConfig::new(),
    };
    let flags: [(&str, &Option<String>); 7] = [
        ("N", &spec.dim),
        ("alpha", &spec.alpha),
        ("p", &spec.p),
        ("beta", &spec.beta),
        ("nonlinearity", &spec.nonlinearity),
        ("gamma", &spec.exp_gamma),
        ("q", &spec.q),
    ];
    for (key, value) in flags.iter().chain(extra.iter()) {
        if let Some(v) = value {
            cfg.set(key, v.clone());
        }
    }
    Ok(cfg)
}

fn real(cfg: &KvConfig, key: &str, default: f64) -> Result<f64> {
    Ok(cfg.get_real(key)?.unwrap_or(default))
}

fn positive(cfg: &KvConfig, key: &str, default: f64) -> Result<f64> {
    let v = real(cfg, key, default)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidInput(format!("{key} must be positive (got {v})")))
    }
}

fn format_of(flag: Option<Format>, cfg: &KvConfig) -> Result<Format> {
    if let Some(f) = flag {
        return Ok(f);
    }
    match cfg.get("format") {
        None | Some("csv") => Ok(Format::Csv),
        Some("json") => Ok(Format::Json),
        Some(other) => Err(Error::InvalidInput(format!("format must be csv or json (got `{other}`)"))),
    }
}

fn out_path(flag: &Option<PathBuf>, cfg: &KvConfig) -> Option<PathBuf> {
    flag.clone().or_else(|| cfg.get("out").map(PathBuf::from))
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn integrator_options(cfg: &KvConfig) -> Result<IntegratorOptions> {
    let defaults = IntegratorOptions::default();
    match cfg.get_real("integrator_tol")? {
        Some(t) if t > 0.0 => Ok(defaults.with_tolerance(t)),
        Some(t) => Err(Error::InvalidInput(format!("integrator_tol must be positive (got {t})"))),
        None => Ok(defaults),
    }
}

/// Files of one trajectory: `(path, contents)` pairs.
fn trajectory_files(traj: &Trajectory, path: &Path, format: Format, skip_below: Option<f64>) -> Vec<(PathBuf, String)> {
    let e = ext(format);
    match format {
        Format::Csv => vec![
            (path.to_path_buf(), export::trajectory_csv(traj, skip_below)),
            (sidecar(path, &format!("events.{e}")), export::events_csv(traj)),
        ],
        Format::Json => vec![(path.to_path_buf(), to_json_text(&export::trajectory_json(traj, skip_below)))],
    }
}

fn write_all(files: &[(PathBuf, String)]) -> Result<()> {
    for (path, contents) in files {
        write_atomic(path, contents.as_bytes())?;
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<i32> {
    let cfg = settings(
        &args.spec,
        &[
            ("n", &args.n),
            ("tol", &args.tol),
            ("rmax", &args.rmax),
            ("gamma_min", &args.gamma_min),
            ("gamma_max", &args.gamma_max),
            ("points", &args.points),
        ],
    )?;
    let spec = ProblemSpec::from_config(&cfg)?;
    let n = cfg.get_uint("n")?.unwrap_or(1) as usize;
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    let tol = positive(&cfg, "tol", 1e-6)?;
    if tol < 1e-9 {
        return Err(Error::InvalidInput(format!("tolerance must be at least 1e-9 (got {tol})")));
    }
    let defaults = ShootOptions::default();
    let integrator = integrator_options(&cfg)?;
    let opts = ShootOptions {
        integrator,
        r_max: positive(&cfg, "rmax", defaults.r_max)?,
        gamma_min: positive(&cfg, "gamma_min", defaults.gamma_min)?,
        gamma_max: positive(&cfg, "gamma_max", defaults.gamma_max)?,
        points: cfg.get_uint("points")?.map_or(defaults.points, |v| v as usize),
        ..defaults
    };
    if opts.gamma_max <= opts.gamma_min || opts.points < 2 {
        return Err(Error::InvalidInput("need gamma_min < gamma_max and points >= 2".into()));
    }
    let format = format_of(args.format, &cfg)?;
    let out = out_path(&args.out, &cfg);

    let res = shoot_with(&spec, n, tol, &opts)?;
    println!("spec        {}", spec.label());
    println!("n           {n}");
    println!("gamma_star  {}", export::fmt17(res.gamma_star));
    println!("R           {}", export::fmt17(res.achieved_r));
    println!("residual    {}", export::fmt17(res.residual));
    println!("bracket     [{}, {}]", export::fmt17(res.bracket.0), export::fmt17(res.bracket.1));
    println!("u'(1)       {}", export::fmt17(res.derivative_at_one));
    if let Some(path) = out {
        let mut files = vec![(path.clone(), to_json_text(&export::shooting_json(&res)))];
        let traj_path = sidecar(&path, &format!("trajectory.{}", ext(format)));
        files.extend(trajectory_files(&res.trajectory, &traj_path, format, None));
        write_all(&files)?;
    }
    Ok(0)
}

fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_real)
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::InvalidInput("p sweep is empty".into()));
    }
    Ok(values)
}

fn with_p(spec: &ProblemSpec, p: f64) -> Result<ProblemSpec> {
    match spec {
        ProblemSpec::Henon(h) => Ok(HenonSpec::new(h.dim, h.alpha, p)?.into()),
        ProblemSpec::General(_) => Err(Error::InvalidInput("--p-sweep needs a Hénon problem".into())),
    }
}

fn summary_line(traj: &Trajectory) -> String {
    let radii = traj.stationary_radii();
    format!(
        "{} gamma={} stationary={} first={} termination={}",
        traj.spec.label(),
        traj.gamma,
        radii.len(),
        radii.first().map_or_else(|| "-".into(), |r| format!("{r:.9}")),
        traj.termination.as_str()
    )
}

fn cmd_trace(args: &TraceArgs) -> Result<i32> {
    let cfg = settings(
        &args.spec,
        &[
            ("u0", &args.gamma),
            ("rmax", &args.rmax),
            ("integrator_tol", &args.tol),
            ("skip_below", &args.skip_below),
            ("p_sweep", &args.p_sweep),
        ],
    )?;
    let base = ProblemSpec::from_config(&cfg)?;
    let gamma = cfg
        .get_real("u0")?
        .ok_or_else(|| Error::InvalidInput("--gamma (initial value) is required".into()))?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be positive (got {gamma})")));
    }
    let r_max = positive(&cfg, "rmax", 10.0)?;
    let skip_below = cfg.get_real("skip_below")?;
    let opts = integrator_options(&cfg)?;
    let format = format_of(args.format, &cfg)?;
    let out = out_path(&args.out, &cfg);
    let sweep = cfg.get("p_sweep").map(parse_sweep).transpose()?;
    let specs: Vec<(Option<f64>, ProblemSpec)> = match &sweep {
        Some(ps) => ps.iter().map(|&p| Ok((Some(p), with_p(&base, p)?))).collect::<Result<_>>()?,
        None => vec![(None, base)],
    };
    if specs.len() > 1 && out.is_none() {
        return Err(Error::InvalidInput("--p-sweep needs --out".into()));
    }

    let trajs: Vec<(Option<f64>, Trajectory)> = specs
        .par_iter()
        .map(|(p, s)| (*p, integrate(s, gamma, r_max, &opts)))
        .collect();
    match out {
        None => {
            let traj = &trajs[0].1;
            let text = match format {
                Format::Csv => export::trajectory_csv(traj, skip_below),
                Format::Json => to_json_text(&export::trajectory_json(traj, skip_below)),
            };
            std::io::stdout().write_all(text.as_bytes())?;
            eprintln!("{}", summary_line(traj));
        }
        Some(path) => {
            let mut files = Vec::new();
            for (p, traj) in &trajs {
                let target = match p {
                    Some(p) => {
                        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        path.with_file_name(format!("{stem}_p{p}.{}", ext(format)))
                    }
                    None => path.clone(),
                };
                files.extend(trajectory_files(traj, &target, format, skip_below));
                println!("{}", summary_line(traj));
            }
            write_all(&files)?;
        }
    }
    Ok(0)
}

fn cmd_scan(args: &ScanArgs) -> Result<i32> {
    let cfg = settings(
        &args.spec,
        &[
            ("gamma_min", &args.gamma_min),
            ("gamma_max", &args.gamma_max),
            ("points", &args.points),
            ("rmax", &args.rmax),
            ("integrator_tol", &args.tol),
        ],
    )?;
    let spec = ProblemSpec::from_config(&cfg)?;
    let defaults = ShootOptions::default();
    let gamma_min = positive(&cfg, "gamma_min", defaults.gamma_min)?;
    let gamma_max = positive(&cfg, "gamma_max", defaults.gamma_max)?;
    let points = cfg.get_uint("points")?.map_or(defaults.points, |v| v as usize);
    let r_max = positive(&cfg, "rmax", defaults.r_max)?;
    let opts = integrator_options(&cfg)?;
    let format = format_of(args.format, &cfg)?;
    let out = out_path(&args.out, &cfg);
    if gamma_max <= gamma_min || points < 2 {
        return Err(Error::InvalidInput("need gamma_min < gamma_max and points >= 2".into()));
    }

    let result = scan(&spec, gamma_min, gamma_max, points, r_max, &opts)?;
    let text = match format {
        Format::Csv => export::scan_csv(&result),
        Format::Json => to_json_text(&export::scan_json(&result)),
    };
    match out {
        Some(path) => write_atomic(&path, text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(0)
}

/// Parses a rows file: `N alpha p [n]` per line, whitespace or comma
/// separated, `#` comments allowed.
pub fn parse_rows(text: &str) -> Result<Vec<(u32, f64, f64, usize)>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if !(3..=4).contains(&f.len()) {
            return Err(Error::Parse(format!("rows line {}: expected `N alpha p [n]`", i + 1)));
        }
        let dim = f[0]
            .parse::<u32>()
            .map_err(|_| Error::Parse(format!("rows line {}: bad N `{}`", i + 1, f[0])))?;
        let n = match f.get(3) {
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("rows line {}: bad n `{s}`", i + 1)))?,
            None => 1,
        };
        rows.push((dim, parse_real(f[1])?, parse_real(f[2])?, n));
    }
    Ok(rows)
}

fn cmd_table(args: &TableArgs) -> Result<i32> {
    let rows = match &args.rows {
        Some(path) => parse_rows(&std::fs::read_to_string(path)?)?,
        None => table_entries(&ExperimentManifest::builtin("table")?)?
            .into_iter()
            .map(|e| (e.dim, e.alpha, e.p, e.n))
            .collect(),
    };
    if rows.is_empty() {
        return Err(Error::InvalidInput("row list is empty".into()));
    }
    let tol = match &args.tol {
        Some(t) => parse_real(t)?,
        None => 1e-6,
    };
    if !(tol >= 1e-9) {
        return Err(Error::InvalidInput(format!("tolerance must be at least 1e-9 (got {tol})")));
    }
    let specs = rows
        .iter()
        .map(|&(dim, alpha, p, n)| {
            if n == 0 {
                return Err(Error::InvalidInput("n must be at least 1".into()));
            }
            Ok(ProblemSpec::from(HenonSpec::new(dim, alpha, p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let format = args.format.unwrap_or(Format::Csv);

    let opts = ShootOptions::default();
    let results: Vec<_> = rows
        .par_iter()
        .zip(specs.par_iter())
        .map(|(row, spec)| shoot_with(spec, row.3, tol, &opts))
        .collect();
    let mut code = 0;
    let mut table = Vec::with_capacity(rows.len());
    for (&(dim, alpha, p, n), res) in rows.iter().zip(&results) {
        let (gamma_star, residual) = match res {
            Ok(r) => (Some(r.gamma_star), Some(r.residual)),
            Err(e) => {
                eprintln!("row N={dim} alpha={alpha} p={p} n={n}: {e}");
                code = code.max(e.exit_code());
                (None, None)
            }
        };
        table.push(TableRow { dim, alpha, p, n, gamma_star, residual });
    }
    let text = match format {
        Format::Csv => export::table_csv(&table),
        Format::Json => to_json_text(&export::table_json(&table)),
    };
    match &args.out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(code)
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let cfg = settings(&args.spec, &[("u0", &args.gamma), ("rmax", &args.rmax)])?;
    let spec = ProblemSpec::from_config(&cfg)?;
    for name in &args.checks {
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(Error::InvalidInput(format!(
                "unknown check `{name}` (expected one of {})",
                CHECK_NAMES.join(", ")
            )));
        }
    }
    let format = format_of(args.format, &cfg)?;
    let out = out_path(&args.out, &cfg);
    let opts = integrator_options(&cfg)?;
    let traj = match (&args.trajectory, cfg.get_real("u0")?) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
            Trajectory::from_nodes(spec.clone(), export::read_trajectory_csv(&text)?, &opts)?
        }
        (None, Some(gamma)) => {
            if !(gamma.is_finite() && gamma > 0.0) {
                return Err(Error::InvalidInput(format!("gamma must be positive (got {gamma})")));
            }
            let r_max = positive(&cfg, "rmax", 1.1)?.max(1.0);
            integrate(&spec, gamma, r_max, &opts.with_tolerance(1e-12))
        }
        (None, None) => {
            return Err(Error::InvalidInput("verify needs --gamma or --trajectory".into()));
        }
    };
    let wants = |name: &str| args.checks.is_empty() || args.checks.iter().any(|c| c == name);
    let grid = if wants("lemma45_trend") {
        let d = ShootOptions::default();
        Some(scan(&spec, d.gamma_min, d.gamma_max, d.points, d.r_max, &opts)?)
    } else {
        None
    };
    let mut report = full_suite(&traj, grid.as_ref(), &opts);
    if let Some(g) = &grid {
        debug_assert_eq!(report.get("lemma45_trend"), Some(&check_lemma45_trend(g)));
    }
    report.retain(&args.checks);
    print!("{}", report.to_table());
    if let Some(path) = out {
        let text = match format {
            Format::Csv => export::report_csv(&report),
            Format::Json => to_json_text(&export::report_json(&report)),
        };
        write_atomic(&path, text.as_bytes())?;
    }
    Ok(if report.all_applicable_passed() { 0 } else { 3 })
}

fn cmd_experiments(action: &ExperimentsCommand) -> Result<i32> {
    match action {
        ExperimentsCommand::List => {
            for id in experiments::EXPERIMENT_IDS {
                println!("{id}");
            }
            Ok(0)
        }
        ExperimentsCommand::Run { id, out, manifest } => {
            let m = match manifest {
                Some(path) => ExperimentManifest::load(path)?,
                None => ExperimentManifest::builtin(id)?,
            };
            if m.id != *id {
                return Err(Error::InvalidInput(format!(
                    "manifest is for `{}`, not `{id}`",
                    m.id
                )));
            }
            let report = experiments::run(&m, out.as_deref())?;
            print!("{}", report.to_text());
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            Ok(if report.passed() { 0 } else { 3 })
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Table(a) => cmd_table(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Experiments { action } => cmd_experiments(action),
    }
}

/// Parses `args`, runs, and maps errors to exit codes (printing them).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
