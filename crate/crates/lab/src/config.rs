//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` given twice (first on line {first})")]
    Duplicate { key: String, line: usize, first: usize },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("line {line}: key `{key}`: cannot parse `{value}`: {reason}")]
    Parse { key: String, line: usize, value: String, reason: String },
    #[error("line {line}: key `{key}`: {reason}")]
    Invalid { key: String, line: usize, reason: String },
    #[error("cannot read config {path}: {reason}")]
    Io { path: String, reason: String },
}

/// Every recognized key with its default, or `None` when it has no default.
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("lattice.phi", Some("0")),
    ("lattice.eps", Some("0.015625")),
    ("lattice.l", Some("1")),
    ("lattice.eta", Some("0.05")),
    ("lattice.margin", Some("cleavage")),
    ("lattice.energy_domain", Some("omega")),
    ("material.alpha", None),
    ("material.beta", None),
    ("material.potential", Some("exp-well")),
    ("material.chi_c", Some("1")),
    ("material.chi_delta", Some("0.1")),
    ("material.chi_cutoff", Some("20")),
    ("material.chi_width", Some("1")),
    ("material.kappa", Some("0")),
    ("material.T", Some("3")),
    ("material.smooth_fk", Some("0.1")),
    ("problem.a", None),
    ("problem.a_factor", Some("1.5")),
    ("problem.p", None),
    ("problem.branch", Some("cr")),
    ("problem.s", Some("0")),
    ("problem.t", Some("0")),
    ("solve.eps_list", Some("1/16, 1/32, 1/64, 1/128")),
    ("solve.max_iters", Some("4000")),
    ("solve.grad_tol", Some("1e-7")),
    ("solve.armijo_c", Some("1e-4")),
    ("solve.shrink", Some("0.5")),
    ("solve.lbfgs_memory", Some("8")),
    ("solve.seed", Some("0")),
    ("solve.mode", Some("plain")),
    ("solve.perturb", Some("0")),
    ("solve.p_grid", Some("9")),
    ("solve.minimize", Some("false")),
    ("solve.gap_slack", Some("0.1")),
    ("magnet.w", Some("0.1")),
    ("noneq.p", None),
    ("noneq.q", None),
    ("noneq.angle", Some("0.5")),
    ("output.dir", Some("out")),
];

fn default_of(key: &str) -> Option<Option<&'static str>> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    /// key → (value, line)
    entries: BTreeMap<String, (String, usize)>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Syntax { line, text: body.to_string() });
            };
            let key = k.trim();
            let value = v.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line, text: body.to_string() });
            }
            if default_of(key).is_none() {
                return Err(ConfigError::UnknownKey { key: key.to_string(), line });
            }
            if let Some((_, first)) = entries.get(key) {
                return Err(ConfigError::Duplicate { key: key.to_string(), line, first: *first });
            }
            entries.insert(key.to_string(), (value.to_string(), line));
        }
        Ok(RunConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    /// Set a key programmatically; used for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if default_of(key).is_none() {
            return Err(ConfigError::UnknownKey { key: key.to_string(), line: 0 });
        }
        self.entries.insert(key.to_string(), (value.to_string(), 0));
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Raw value and its line (0 for defaults and overrides).
    pub fn raw(&self, key: &str) -> Option<(String, usize)> {
        if let Some((v, l)) = self.entries.get(key) {
            return Some((v.clone(), *l));
        }
        default_of(key).flatten().map(|d| (d.to_string(), 0))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get_opt(key)?.ok_or_else(|| ConfigError::Missing { key: key.to_string() })
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        assert!(default_of(key).is_some(), "unregistered key {key}");
        let Some((v, line)) = self.raw(key) else { return Ok(None) };
        v.parse::<T>().map(Some).map_err(|e| ConfigError::Parse {
            key: key.to_string(),
            line,
            value: v,
            reason: e.to_string(),
        })
    }

    /// A finite float; also accepts `n/d` fractions.
    pub fn float(&self, key: &str) -> Result<f64, ConfigError> {
        self.float_opt(key)?.ok_or_else(|| ConfigError::Missing { key: key.to_string() })
    }

    pub fn float_opt(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some((v, line)) = self.raw(key) else { return Ok(None) };
        parse_number(&v)
            .map(Some)
            .map_err(|reason| ConfigError::Parse { key: key.to_string(), line, value: v, reason })
    }

    pub fn float_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let (v, line) = self.raw(key).ok_or_else(|| ConfigError::Missing { key: key.to_string() })?;
        v.split(',')
            .map(|s| parse_number(s.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|reason| ConfigError::Parse { key: key.to_string(), line, value: v.clone(), reason })
    }

    pub fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        let line = self.entries.get(key).map(|(_, l)| *l).unwrap_or(0);
        ConfigError::Invalid { key: key.to_string(), line, reason: reason.into() }
    }

    /// All keys with their effective values, explicit or default.
    pub fn effective(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .filter_map(|(k, _)| self.raw(k).map(|(v, _)| (k.to_string(), v)))
            .collect()
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    let x = if let Some((n, d)) = s.split_once('/') {
        let n: f64 = n.trim().parse().map_err(|e| format!("{e}"))?;
        let d: f64 = d.trim().parse().map_err(|e| format!("{e}"))?;
        n / d
    } else {
        s.parse::<f64>().map_err(|e| format!("{e}"))?
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err("not a finite number".into())
    }
}
