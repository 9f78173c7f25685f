//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use henon_core::analysis::{check_lemma2, check_lemma3, check_monotone, check_neumann, CheckStatus};
use henon_core::experiments::{self, table_entries, ExperimentManifest, ExperimentReport, Verdict};
use henon_core::integrator::{Termination, Trajectory};
use henon_core::problem::{critical_exponent, critical_exponent_exact, log_grid};
use henon_core::{integrate, IntegratorOptions, ProblemSpec, ShootingResult};
use num_rational::Ratio;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

fn run_experiment(id: &str) -> ExperimentReport {
    let manifest = ExperimentManifest::builtin(id).expect("builtin manifest");
    experiments::run(&manifest, None).expect("experiment runs")
}

fn comparison_lines(report: &ExperimentReport) -> Vec<String> {
    report
        .comparisons
        .iter()
        .filter(|c| c.verdict != Verdict::Pass)
        .map(|c| {
            format!(
                "{}: computed {:?}, rel error {:?} ({}) {}",
                c.label,
                c.computed,
                c.rel_error,
                c.verdict.as_str(),
                c.note
            )
        })
        .collect()
}

fn gamma_table(report: &ExperimentReport) -> Outcome {
    let failing = comparison_lines(report);
    Outcome {
        pass: report.passed(),
        summary: format!(
            "{}/{} rows within relative 5e-3",
            report.comparisons.len() - failing.len(),
            report.comparisons.len()
        ),
        details: failing,
    }
}

fn oscillations() -> Outcome {
    let report = run_experiment("oscillations");
    let failing = comparison_lines(&report);
    Outcome {
        pass: report.passed(),
        summary: format!(
            "{}/{} indices converge to the expected gamma*",
            report.comparisons.len() - failing.len(),
            report.comparisons.len()
        ),
        details: failing,
    }
}

fn pbar() -> Outcome {
    let report = run_experiment("pbar");
    let c = &report.comparisons[0];
    Outcome {
        pass: report.passed(),
        summary: format!("estimate {:?}, expected range [14, 18]", c.computed),
        details: vec![],
    }
}

fn lemma_suite(solutions: &[(String, &ShootingResult)]) -> Outcome {
    let mut details = Vec::new();
    for (label, res) in solutions {
        let traj = &res.trajectory;
        for check in [check_lemma2(traj), check_lemma3(traj), check_monotone(traj), check_neumann(traj)] {
            if check.status != CheckStatus::Pass {
                details.push(format!(
                    "{label}: {} {} (measured {:?}) {}",
                    check.name,
                    check.status.as_str(),
                    check.measured,
                    check.detail
                ));
            }
        }
    }
    Outcome {
        pass: details.is_empty() && solutions.len() == 15,
        summary: format!("{} solutions checked, {} check failures", solutions.len(), details.len()),
        details,
    }
}

fn first_radius(spec: &ProblemSpec, gamma: f64, opts: &IntegratorOptions) -> (Option<f64>, Termination) {
    let traj = integrate(spec, gamma, 10.0, opts);
    (traj.nth_stationary(1), traj.termination)
}

fn trend(manifest: &ExperimentManifest) -> Outcome {
    let opts = IntegratorOptions::default();
    let mut details = Vec::new();
    let entries = table_entries(manifest).expect("table rows");
    for e in &entries {
        let spec = e.spec().unwrap();
        let (small, _) = first_radius(&spec, 1e-2, &opts);
        let small = small.unwrap_or(f64::INFINITY);
        // Step down from 1e4 past any blow-up classification.
        let mut large = None;
        for g in log_grid(1e-2, 1e4, 61).into_iter().rev() {
            let (r, term) = first_radius(&spec, g, &opts);
            if term != Termination::BlowUp || r.is_some() {
                large = r.map(|r| (g, r));
                break;
            }
        }
        let ok_small = small > 1.0;
        let ok_large = large.is_some_and(|(_, r)| r < 0.1);
        if !(ok_small && ok_large) {
            details.push(format!("{}: R1(1e-2) = {small}, R1 at large gamma = {large:?}", e.label()));
        }
    }
    Outcome {
        pass: details.is_empty(),
        summary: format!("{}/{} triples follow the trend", entries.len() - details.len(), entries.len()),
        details,
    }
}

fn identity(converged: &[(String, &ShootingResult)]) -> Outcome {
    let opts = IntegratorOptions::default();
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for (label, res) in converged {
        let traj = integrate(&res.trajectory.spec, res.gamma_star, 1.0, &opts);
        let residual = henon_core::integrator::verify_integral_identity(&traj, 1e-12);
        worst = worst.max(residual);
        if residual.is_nan() || residual >= 1e-6 {
            details.push(format!("{label}: residual {residual:e}"));
        }
    }
    Outcome {
        pass: details.is_empty(),
        summary: format!("{} trajectories, max residual {worst:.3e}", converged.len()),
        details,
    }
}

fn origin_series(solution: &ShootingResult) -> Outcome {
    let tight = IntegratorOptions::default().with_tolerance(1e-13);
    let at = |r_start: f64| -> Trajectory {
        integrate(&solution.trajectory.spec, solution.gamma_star, 1.0, &IntegratorOptions { r_start, ..tight })
    };
    let a = at(1e-6);
    let b = at(5e-7);
    let ua = a.eval(1.0).unwrap().0;
    let ub = b.eval(1.0).unwrap().0;
    let diff = (ua - ub).abs();
    Outcome {
        pass: diff < 1e-10,
        summary: format!("|u(1) change| = {diff:.3e} (handoff radii {:.2e}, {:.2e})", a.r_start(), b.r_start()),
        details: vec![],
    }
}

fn general() -> (Outcome, ExperimentReport) {
    let report = run_experiment("general");
    let failing = comparison_lines(&report);
    let outcome = Outcome {
        pass: report.passed(),
        summary: format!(
            "{}/{} comparisons pass (cases and general-vs-specialized crosscheck)",
            report.comparisons.len() - failing.len(),
            report.comparisons.len()
        ),
        details: failing,
    };
    (outcome, report)
}

fn critical() -> Outcome {
    let cases = [(3u32, 3i64, Ratio::from_integer(11)), (4, 5, Ratio::from_integer(8)), (5, 9, Ratio::new(25, 3))];
    let mut details = Vec::new();
    for (n, a, expected) in cases {
        let exact = critical_exponent_exact(n, Ratio::from_integer(a)).unwrap();
        let float = critical_exponent(n, a as f64).unwrap();
        let target = *expected.numer() as f64 / *expected.denom() as f64;
        if exact != expected || (float - target).abs() > 1e-15 * target {
            details.push(format!("N={n} alpha={a}: exact {exact}, float {float}"));
        }
    }
    Outcome {
        pass: details.is_empty(),
        summary: "N=3,alpha=3 -> 11; N=4,alpha=5 -> 8; N=5,alpha=9 -> 25/3".into(),
        details,
    }
}

fn report(k: usize, title: &str, outcome: &Outcome, secs: f64, budget: Option<f64>) -> bool {
    let timing = match budget {
        Some(b) => format!(" [{secs:.2} s, budget {b} s]"),
        None => format!(" [{secs:.2} s]"),
    };
    let within = budget.is_none_or(|b| secs < b);
    let pass = outcome.pass && within;
    println!("criterion {k}: {} {title}: {}{timing}", if pass { "PASS" } else { "FAIL" }, outcome.summary);
    for d in &outcome.details {
        println!("    {d}");
    }
    pass
}

fn main() -> ExitCode {
    let mut all = true;
    let manifest = ExperimentManifest::builtin("table").unwrap();

    let t = Instant::now();
    let table = experiments::run(&manifest, None).expect("table runs");
    let table_secs = t.elapsed().as_secs_f64();
    all &= report(1, "gamma* table", &gamma_table(&table), table_secs, Some(60.0));

    let t = Instant::now();
    let o = oscillations();
    all &= report(2, "oscillating solutions", &o, t.elapsed().as_secs_f64(), Some(120.0));

    let t = Instant::now();
    let o = pbar();
    all &= report(3, "oscillation disappearance", &o, t.elapsed().as_secs_f64(), Some(120.0));

    let entries = table_entries(&manifest).unwrap();
    let solutions: Vec<(String, &ShootingResult)> = entries
        .iter()
        .zip(&table.solutions)
        .filter_map(|(e, s)| s.as_ref().map(|s| (e.label(), s)))
        .collect();
    let t = Instant::now();
    let o = lemma_suite(&solutions);
    all &= report(4, "lemma property suite", &o, t.elapsed().as_secs_f64(), None);

    let t = Instant::now();
    let o = trend(&manifest);
    all &= report(5, "stationary radius trend", &o, t.elapsed().as_secs_f64(), None);

    let t = Instant::now();
    let (general_outcome, general_report) = general();
    let general_secs = t.elapsed().as_secs_f64();

    let osc = run_experiment("oscillations");
    let mut converged = solutions.clone();
    let osc_labels = ["oscillations n=1", "oscillations n=2", "oscillations n=3"];
    converged.extend(osc.solutions.iter().zip(osc_labels).filter_map(|(s, l)| s.as_ref().map(|s| (l.to_string(), s))));
    converged.extend(
        general_report
            .solutions
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (format!("general case {}", i + 1), s))),
    );
    let t = Instant::now();
    let o = identity(&converged);
    all &= report(6, "integral identity", &o, t.elapsed().as_secs_f64(), None);

    let t = Instant::now();
    let o = match solutions.iter().find(|(_, s)| {
        s.trajectory.spec.henon().is_some_and(|h| h.dim == 3 && h.alpha == 3.0 && h.p == 5.0)
    }) {
        Some((_, s)) => origin_series(s),
        None => Outcome { pass: false, summary: "no (3,3,5) solution".into(), details: vec![] },
    };
    all &= report(7, "origin series convergence", &o, t.elapsed().as_secs_f64(), None);

    all &= report(8, "generalized framework", &general_outcome, general_secs, None);

    let t = Instant::now();
    let o = critical();
    all &= report(9, "critical exponents", &o, t.elapsed().as_secs_f64(), None);

    println!("acceptance: {}", if all { "ALL PASS" } else { "FAILURES PRESENT" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
