//! Flat `key = value` text configuration.
//!
//! Blank lines and `#` comments are ignored. Keys may repeat (manifests use
//! repeated `row` entries); [`KvConfig::get`] returns the last occurrence.
//! Reals accept rational literals such as `25/3`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problem::{GeneralSpec, HenonSpec, Nonlinearity, ProblemSpec, Weight};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvConfig {
    entries: Vec<(String, String)>,
}

impl KvConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
            }
            entries.push((k.to_string(), v.trim().to_string()));
        }
        Ok(KvConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> + '_ {
        self.entries.iter().map(|(k, v)| (k, v))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    /// Replaces every occurrence of `key`.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.retain(|(k, _)| k != key);
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }

    pub fn get_real(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| parse_real(v).map_err(|e| Error::Parse(format!("key `{key}`: {e}"))))
            .transpose()
    }

    pub fn get_uint(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::Parse(format!("key `{key}`: expected an integer, got `{v}`")))
            })
            .transpose()
    }

    fn require_real(&self, key: &str) -> Result<f64> {
        self.get_real(key)?
            .ok_or_else(|| Error::InvalidInput(format!("missing key `{key}`")))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Parses a real number or a rational `a/b`.
pub fn parse_real(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Some((a, b)) = t.split_once('/') {
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in `{t}`")))?;
        let b: f64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in `{t}`")))?;
        if b == 0.0 {
            return Err(Error::Parse(format!("zero denominator in `{t}`")));
        }
        return Ok(a / b);
    }
    t.parse()
        .map_err(|_| Error::Parse(format!("expected a number, got `{t}`")))
}

impl ProblemSpec {
    /// Reads `N`, `alpha`, `p` (Hénon) or, when `nonlinearity` is present,
    /// a general spec with weight `r^alpha [+ r^beta]` and
    /// `nonlinearity = power (p) | exp (gamma, q)`.
    pub fn from_config(cfg: &KvConfig) -> Result<Self> {
        let dim = cfg
            .get_uint("N")?
            .ok_or_else(|| Error::InvalidInput("missing key `N`".into()))?;
        let dim = u32::try_from(dim).map_err(|_| Error::InvalidInput("N too large".into()))?;
        let alpha = cfg.require_real("alpha")?;
        match cfg.get("nonlinearity") {
            None => {
                let p = cfg.require_real("p")?;
                Ok(HenonSpec::new(dim, alpha, p)?.into())
            }
            Some(kind) => {
                let weight = match cfg.get_real("beta")? {
                    Some(beta) => Weight::TwoPower { alpha, beta },
                    None => Weight::Power { alpha },
                };
                let nonlinearity = match kind {
                    "power" => Nonlinearity::Power {
                        p: cfg.require_real("p")?,
                    },
                    "exp" => Nonlinearity::Exp {
                        gamma: cfg.get_real("gamma")?.unwrap_or(1.0),
                        q: cfg.get_real("q")?.unwrap_or(1.0),
                    },
                    "custom" => {
                        return Err(Error::InvalidInput(
                            "custom nonlinearities can only be built programmatically".into(),
                        ))
                    }
                    other => {
                        return Err(Error::InvalidInput(format!(
                            "unknown nonlinearity `{other}` (expected exp|power|custom)"
                        )))
                    }
                };
                Ok(GeneralSpec::new(dim, weight, nonlinearity)?.into())
            }
        }
    }

    pub fn to_config(&self) -> Result<KvConfig> {
        let mut cfg = KvConfig::new();
        match self {
            ProblemSpec::Henon(s) => {
                cfg.set("N", s.dim.to_string());
                cfg.set("alpha", fmt_real(s.alpha));
                cfg.set("p", fmt_real(s.p));
            }
            ProblemSpec::General(g) => {
                cfg.set("N", g.dim.to_string());
                match &g.weight {
                    Weight::Power { alpha } => cfg.set("alpha", fmt_real(*alpha)),
                    Weight::TwoPower { alpha, beta } => {
                        cfg.set("alpha", fmt_real(*alpha));
                        cfg.set("beta", fmt_real(*beta));
                    }
                    Weight::Custom { .. } => {
                        return Err(Error::InvalidInput(
                            "custom weights cannot be serialized".into(),
                        ))
                    }
                }
                match &g.nonlinearity {
                    Nonlinearity::Power { p } => {
                        cfg.set("nonlinearity", "power");
                        cfg.set("p", fmt_real(*p));
                    }
                    Nonlinearity::Exp { gamma, q } => {
                        cfg.set("nonlinearity", "exp");
                        cfg.set("gamma", fmt_real(*gamma));
                        cfg.set("q", fmt_real(*q));
                    }
                    Nonlinearity::Custom { .. } => {
                        return Err(Error::InvalidInput(
                            "custom nonlinearities cannot be serialized".into(),
                        ))
                    }
                }
            }
        }
        Ok(cfg)
    }
}

fn fmt_real(x: f64) -> String {
    // Shortest representation that round-trips.
    format!("{x:?}")
}
