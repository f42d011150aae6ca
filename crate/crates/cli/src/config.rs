//! Run configuration: a flat key/value map filled from an optional config
//! file and then from command-line flags, which win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// Every key a config file may set, with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("alpha", "fractional order"),
    ("beta", "second order (embedding constant)"),
    ("s", "order of the fractional Laplacian or Riesz potential"),
    ("h", "grid spacing"),
    ("window", "lo,hi per axis, e.g. -4,4 or -2,2,-2,2"),
    ("dim", "ambient dimension when nothing else fixes it"),
    ("shape", "interval:a,b | union:a,b;c,d | ball:c..,r | cube:lo..,hi.. | halfspace:n..,offset"),
    ("fn", "gaussian[:c..,sigma] | bump[:c..,r] | poly:c..,r,power | atom:a,b"),
    ("backend", "direct | fft | riesz"),
    ("method", "perimeter route: auto | exact | grid"),
    ("direction", "unit vector for divergence input, default e1"),
    ("out", "json | csv"),
    ("output", "output file, default stdout"),
    ("threads", "worker thread cap"),
    ("levels", "number of coarea levels"),
    ("point", "blow-up base point"),
    ("radii", "blow-up radii, strictly decreasing"),
    ("windows", "tangent comparison windows"),
    ("half_width", "blow-up window half-width"),
];

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<(), UsageError> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return usage(format!("unknown configuration key `{key}`"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse_text(text: &str) -> Result<Self, UsageError> {
        let mut c = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("config line {}: expected `key = value`, got `{raw}`", n + 1));
            };
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path).map_err(|e| UsageError(format!("--config {}: {e}", path.display())))?;
        Self::parse_text(&text)
    }

    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// `other` wins on every key it sets.
    pub fn overlay(mut self, other: &RunConfig) -> Self {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
        self
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, UsageError> {
        self.get(key).map(|v| v.parse::<f64>().map_err(|_| UsageError(format!("--{key}: `{v}` is not a number")))).transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, UsageError> {
        self.get(key)
            .map(|v| v.parse::<usize>().map_err(|_| UsageError(format!("--{key}: `{v}` is not a non-negative integer"))))
            .transpose()
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>, UsageError> {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }
}

pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, UsageError> {
    v.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| UsageError(format!("--{key}: `{t}` is not a number")))).collect()
}
