//! Flat `key = value` experiment configuration.
//!
//! A config file is a TOML document without tables. Command-line overrides
//! use the same value syntax (`--set n=128`, `--set delta=[1e-3,1e-4]`); a
//! right-hand side that does not parse as a TOML value is taken as a bare
//! string. Every key read by an experiment is recorded together with the
//! value actually used, defaults included, and any key left unread is an
//! error.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::Value as Json;
use toml::Value;

use crate::error::CliError;

/// Keys every experiment accepts without reading them.
const RESERVED: [&str; 1] = ["experiment"];

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, Value>,
    resolved: RefCell<BTreeMap<String, Json>>,
    read: RefCell<BTreeSet<String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            if value.is_table() {
                return Err(CliError::Input(format!(
                    "config must be flat, but `{key}` is a table"
                )));
            }
            values.insert(key, value);
        }
        Ok(Self {
            values,
            ..Self::default()
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("override `{assignment}` is not of the form key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Input(format!("override `{assignment}` has an empty key")));
        }
        let raw = raw.trim();
        let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        if value.is_table() {
            return Err(CliError::Input(format!("override for `{key}` must not be a table")));
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn lookup(&self, key: &str) -> Option<&Value> {
        self.read.borrow_mut().insert(key.to_string());
        self.values.get(key)
    }

    fn record(&self, key: &str, value: Json) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    fn bad(key: &str, expected: &str, got: &Value) -> CliError {
        CliError::Input(format!("`{key}` must be {expected}, got {got}"))
    }

    fn as_f64(key: &str, v: &Value) -> Result<f64, CliError> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            other => Err(Self::bad(key, "a number", other)),
        }
    }

    fn as_usize(key: &str, v: &Value) -> Result<usize, CliError> {
        match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            other => Err(Self::bad(key, "a nonnegative integer", other)),
        }
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = match self.lookup(key) {
            Some(v) => Self::as_f64(key, v)?,
            None => default,
        };
        if !v.is_finite() {
            return Err(CliError::Input(format!("`{key}` must be finite")));
        }
        self.record(key, Json::from(v));
        Ok(v)
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        if self.values.contains_key(key) {
            self.f64(key, 0.0).map(Some)
        } else {
            self.read.borrow_mut().insert(key.to_string());
            self.record(key, Json::Null);
            Ok(None)
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let v = match self.lookup(key) {
            Some(v) => Self::as_usize(key, v)?,
            None => default,
        };
        self.record(key, Json::from(v));
        Ok(v)
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        self.usize(key, default as usize).map(|v| v as u64)
    }

    pub fn bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        let v = match self.lookup(key) {
            Some(Value::Boolean(b)) => *b,
            Some(other) => return Err(Self::bad(key, "true or false", other)),
            None => default,
        };
        self.record(key, Json::from(v));
        Ok(v)
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String, CliError> {
        let v = match self.lookup(key) {
            Some(Value::String(s)) => s.clone(),
            Some(other) => return Err(Self::bad(key, "a string", other)),
            None => default.to_string(),
        };
        self.record(key, Json::from(v.clone()));
        Ok(v)
    }

    /// A number or an array of numbers.
    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let v = match self.lookup(key) {
            Some(Value::Array(items)) => items.iter().map(|x| Self::as_f64(key, x)).collect::<Result<Vec<_>, _>>()?,
            Some(x) => vec![Self::as_f64(key, x)?],
            None => default.to_vec(),
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Input(format!("`{key}` needs at least one finite value")));
        }
        self.record(key, Json::from(v.clone()));
        Ok(v)
    }

    /// A nonnegative integer or an array of them.
    pub fn usize_list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, CliError> {
        let v = match self.lookup(key) {
            Some(Value::Array(items)) => items.iter().map(|x| Self::as_usize(key, x)).collect::<Result<Vec<_>, _>>()?,
            Some(x) => vec![Self::as_usize(key, x)?],
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(CliError::Input(format!("`{key}` needs at least one value")));
        }
        self.record(key, Json::from(v.clone()));
        Ok(v)
    }

    /// Fails on keys that no parameter read, and on an `experiment` key
    /// naming a different experiment.
    pub fn finish(&self, experiment: &str) -> Result<(), CliError> {
        if let Some(Value::String(name)) = self.values.get("experiment") {
            if name != experiment {
                return Err(CliError::Input(format!(
                    "config is for `{name}` but the `{experiment}` experiment was requested"
                )));
            }
        }
        let read = self.read.borrow();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .map(String::as_str)
            .filter(|k| !read.contains(*k) && !RESERVED.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Input(format!("unknown keys for `{experiment}`: {}", unknown.join(", "))))
        }
    }

    /// Every parameter as used, defaults included.
    pub fn resolved(&self) -> BTreeMap<String, Json> {
        self.resolved.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_and_records_defaults() {
        let cfg = Config::parse("n = 32\neps = 0.25\n").unwrap();
        assert_eq!(cfg.usize("n", 8).unwrap(), 32);
        assert_eq!(cfg.f64("eps", 0.0).unwrap(), 0.25);
        assert_eq!(cfg.f64("r", 2.0).unwrap(), 2.0);
        let resolved = cfg.resolved();
        assert_eq!(resolved["r"], Json::from(2.0));
        cfg.finish("any").unwrap();
    }

    #[test]
    fn overrides_parse_values() {
        let mut cfg = Config::parse("").unwrap();
        cfg.set("delta = [1e-3, 1e-4]").unwrap();
        cfg.set("density=cosine").unwrap();
        cfg.set("n=5").unwrap();
        assert_eq!(cfg.f64_list("delta", &[]).unwrap(), vec![1e-3, 1e-4]);
        assert_eq!(cfg.string("density", "uniform").unwrap(), "cosine");
        assert_eq!(cfg.usize_list("n", &[1]).unwrap(), vec![5]);
        assert!(cfg.set("novalue").is_err());
    }

    #[test]
    fn rejects_tables_unknown_keys_and_wrong_types() {
        assert!(Config::parse("[section]\na = 1").is_err());
        let cfg = Config::parse("n = 3\ntypo = 1").unwrap();
        cfg.usize("n", 1).unwrap();
        assert!(cfg.finish("x").is_err());
        let cfg = Config::parse("n = -3").unwrap();
        assert!(cfg.usize("n", 1).is_err());
        let cfg = Config::parse("experiment = \"pde1d\"").unwrap();
        assert!(cfg.finish("closeness").is_err());
    }
}
