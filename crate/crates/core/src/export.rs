//! CSV and JSON writers (17 significant digits) and the trajectory CSV
//! reader.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::{json, Map, Number, Value};

use crate::analysis::DiagnosticReport;
use crate::error::{Error, Result};
use crate::integrator::{Node, Trajectory};
use crate::problem::ProblemSpec;
use crate::shooting::{GammaScan, ShootingResult};

/// `x` with 17 significant digits, e.g. `1.0816000000000000e0`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number with 17 significant digits; `null` for non-finite values.
pub fn num17(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(Number::from_str(&fmt17(x)).expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `dir/stem.suffix` for a path `dir/stem.ext`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn trajectory_csv(traj: &Trajectory, skip_below: Option<f64>) -> String {
    let mut out = String::from("r,u,uprime\n");
    for n in &traj.nodes {
        if skip_below.is_some_and(|r0| n.r < r0) {
            continue;
        }
        out.push_str(&format!("{},{},{}\n", fmt17(n.r), fmt17(n.u), fmt17(n.v)));
    }
    out
}

pub fn events_csv(traj: &Trajectory) -> String {
    let mut out = String::from("kind,index,r,u,second_derivative\n");
    for e in &traj.events {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.kind.as_str(),
            e.index,
            fmt17(e.r),
            fmt17(e.u_value),
            opt17(e.second_derivative)
        ));
    }
    out
}

pub fn trajectory_json(traj: &Trajectory, skip_below: Option<f64>) -> Value {
    let nodes: Vec<Value> = traj
        .nodes
        .iter()
        .filter(|n| !skip_below.is_some_and(|r0| n.r < r0))
        .map(|n| json!({"r": num17(n.r), "u": num17(n.u), "uprime": num17(n.v)}))
        .collect();
    let events: Vec<Value> = traj
        .events
        .iter()
        .map(|e| {
            json!({
                "kind": e.kind.as_str(),
                "index": e.index,
                "r": num17(e.r),
                "u": num17(e.u_value),
                "second_derivative": e.second_derivative.map_or(Value::Null, num17),
            })
        })
        .collect();
    json!({
        "spec": spec_json(&traj.spec),
        "gamma": num17(traj.gamma),
        "termination": traj.termination.as_str(),
        "nodes": nodes,
        "events": events,
    })
}

/// The spec as its key-value config, with numeric values as numbers;
/// specs with opaque callables fall back to their label.
pub fn spec_json(spec: &ProblemSpec) -> Value {
    let Ok(cfg) = spec.to_config() else {
        return json!({ "label": spec.label() });
    };
    let mut map = Map::new();
    for (k, v) in cfg.entries() {
        let value = if let Ok(i) = v.parse::<i64>() {
            Value::from(i)
        } else if let Ok(x) = v.parse::<f64>() {
            num17(x)
        } else {
            Value::from(v.as_str())
        };
        map.insert(k.clone(), value);
    }
    Value::Object(map)
}

pub fn shooting_json(res: &ShootingResult) -> Value {
    json!({
        "spec": spec_json(&res.trajectory.spec),
        "n": res.n,
        "gamma_star": num17(res.gamma_star),
        "achieved_R": num17(res.achieved_r),
        "residual": num17(res.residual),
        "bracket": [num17(res.bracket.0), num17(res.bracket.1)],
    })
}

pub fn scan_csv(scan: &GammaScan) -> String {
    let k = scan.max_stationary_count().max(1);
    let mut out = String::from("gamma");
    for i in 1..=k {
        out.push_str(&format!(",R{i}"));
    }
    out.push_str(",termination\n");
    for rec in &scan.records {
        out.push_str(&fmt17(rec.gamma));
        for i in 1..=k {
            out.push(',');
            out.push_str(&opt17(rec.radius(i)));
        }
        out.push(',');
        out.push_str(rec.termination.as_str());
        out.push('\n');
    }
    out
}

pub fn scan_json(scan: &GammaScan) -> Value {
    let records: Vec<Value> = scan
        .records
        .iter()
        .map(|r| {
            json!({
                "gamma": num17(r.gamma),
                "stationary": r.stationary.iter().map(|&x| num17(x)).collect::<Vec<_>>(),
                "termination": r.termination.as_str(),
            })
        })
        .collect();
    json!({ "spec": spec_json(&scan.spec), "r_max": num17(scan.r_max), "records": records })
}

/// One row of a `table` run.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub dim: u32,
    pub alpha: f64,
    pub p: f64,
    pub n: usize,
    pub gamma_star: Option<f64>,
    pub residual: Option<f64>,
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = String::from("N,alpha,p,n,gamma_star,residual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.dim,
            fmt17(r.alpha),
            fmt17(r.p),
            r.n,
            opt17(r.gamma_star),
            opt17(r.residual)
        ));
    }
    out
}

pub fn table_json(rows: &[TableRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "N": r.dim,
                    "alpha": num17(r.alpha),
                    "p": num17(r.p),
                    "n": r.n,
                    "gamma_star": r.gamma_star.map_or(Value::Null, num17),
                    "residual": r.residual.map_or(Value::Null, num17),
                })
            })
            .collect(),
    )
}

pub fn report_json(report: &DiagnosticReport) -> Value {
    let checks: Vec<Value> = report
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "anchor": c.anchor,
                "status": c.status.as_str(),
                "measured": c.measured.map_or(Value::Null, num17),
                "tolerance": c.tolerance.map_or(Value::Null, num17),
                "detail": c.detail,
            })
        })
        .collect();
    json!({ "subject": report.subject, "checks": checks })
}

pub fn report_csv(report: &DiagnosticReport) -> String {
    let mut out = String::from("name,status,measured,tolerance\n");
    for c in &report.checks {
        out.push_str(&format!(
            "{},{},{},{}\n",
            c.name,
            c.status.as_str(),
            opt17(c.measured),
            opt17(c.tolerance)
        ));
    }
    out
}

pub fn to_json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Parses a trajectory CSV with header `r,u,uprime`. Row order is kept as
/// written; ordering is validated by [`Trajectory::from_nodes`].
pub fn read_trajectory_csv(text: &str) -> Result<Vec<Node>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trajectory file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["r", "u", "uprime"] {
        return Err(Error::Parse(format!(
            "expected header `r,u,uprime`, found `{header}`"
        )));
    }
    lines
        .map(|(i, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
            match vals[..] {
                [r, u, v] => Ok(Node { r, u, v }),
                _ => Err(Error::Parse(format!("line {}: expected 3 columns", i + 1))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegratorOptions};
    use crate::problem::HenonSpec;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [1.0816, 1.0 / 3.0, 2584.0, 1e-300, -7.25e12, f64::MAX] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(num17(f64::NAN), Value::Null);
        let text = serde_json::to_string(&num17(0.1)).unwrap();
        assert_eq!(text, "1.0000000000000001e-1");
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let spec: ProblemSpec = HenonSpec::new(3, 3.0, 5.0).unwrap().into();
        let traj = integrate(&spec, 1.0, 1.0, &IntegratorOptions::default());
        let csv = trajectory_csv(&traj, None);
        assert!(csv.starts_with("r,u,uprime\n"));
        let nodes = read_trajectory_csv(&csv).unwrap();
        assert_eq!(nodes, traj.nodes);
        let skipped = read_trajectory_csv(&trajectory_csv(&traj, Some(0.2))).unwrap();
        assert!(skipped.iter().all(|n| n.r >= 0.2));
        assert!(events_csv(&traj).starts_with("kind,index,r,u,second_derivative\n"));
    }

    #[test]
    fn reader_rejects_bad_input() {
        assert!(read_trajectory_csv("").is_err());
        assert!(read_trajectory_csv("a,b,c\n1,2,3\n").is_err());
        assert!(read_trajectory_csv("r,u,uprime\n1,2\n").is_err());
        assert!(read_trajectory_csv("r,u,uprime\n1,x,3\n").is_err());
    }

    #[test]
    fn spec_json_uses_numbers() {
        let spec: ProblemSpec = HenonSpec::new(5, 9.0, 25.0 / 3.0).unwrap().into();
        let v = spec_json(&spec);
        assert_eq!(v["N"], json!(5));
        assert!(v["p"].is_number());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
        assert_eq!(sidecar(&path, "events.csv"), dir.path().join("sub").join("out.events.csv"));
    }
}
