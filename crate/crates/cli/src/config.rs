//! Run configuration: defaults, then a flat `key = value` file, then flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: PathBuf, line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: `{value}`")]
    BadValue { key: String, value: String },
}

/// Every setting a command may use, after merging all sources.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub a: f64,
    /// Second-half fields; several values give a sweep where supported.
    pub b: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub beta: f64,
    pub gamma: f64,
    pub coupling: f64,
    /// Largest stroboscopic cycle; `None` picks a command-specific default.
    pub n_max: Option<u64>,
    pub nodes: usize,
    pub max_nodes: usize,
    pub tolerance: f64,
    pub sizes: Option<Vec<usize>>,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub measures: Vec<String>,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_points: usize,
    pub tuples: usize,
    pub seed: u64,
    pub flip_pairing: bool,
    /// Cycles averaged per block in the power-law fit.
    pub fit_block: usize,
    /// Fraction of the largest cycle where the fitted tail starts.
    pub fit_tail: f64,
    /// Multiply the trace distance by ½ (`trace-norm = half`) so it lies in
    /// [0, 1]; the default is the plain trace norm of the difference.
    pub half_trace_distance: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: 1.4,
            b: None,
            tau: None,
            beta: 20.0,
            gamma: 1.0,
            coupling: 1.0,
            n_max: None,
            nodes: 4096,
            max_nodes: 1 << 20,
            tolerance: 1e-9,
            sizes: None,
            out: PathBuf::from("out"),
            threads: None,
            measures: vec!["concurrence".into(), "discord".into()],
            beta_min: 0.01,
            beta_max: 40.0,
            beta_points: 400,
            tuples: 20,
            seed: 2024,
            flip_pairing: false,
            fit_block: 10,
            fit_tail: 10f64.powf(-0.75),
            half_trace_distance: false,
        }
    }
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| bad(key, value))
}

/// A single value, a comma list, or an inclusive range `start:stop:step`.
pub fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) =
                (scalar(key, start)?, scalar(key, stop)?, scalar(key, step)?);
            if !(step > 0.0) || stop < start {
                return Err(bad(key, value));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=count)
                .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
                .collect())
        }
        [_] => value.split(',').map(|v| scalar(key, v)).collect(),
        _ => Err(bad(key, value)),
    }
}

fn parse_sizes(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    value.split(',').map(|v| scalar(key, v)).collect()
}

impl RunConfig {
    /// Applies one setting.  Keys match the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key.replace('_', "-").as_str() {
            "a" => self.a = scalar(key, value)?,
            "b" => self.b = Some(parse_grid(key, value)?),
            "tau" => self.tau = Some(parse_grid(key, value)?),
            "beta" => self.beta = scalar(key, value)?,
            "gamma" => self.gamma = scalar(key, value)?,
            "J" | "j" | "coupling" => self.coupling = scalar(key, value)?,
            "n-max" => self.n_max = Some(scalar(key, value)?),
            "nodes" => self.nodes = scalar(key, value)?,
            "max-nodes" => self.max_nodes = scalar(key, value)?,
            "tolerance" => self.tolerance = scalar(key, value)?,
            "N" | "n" | "sizes" => self.sizes = Some(parse_sizes(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = Some(scalar(key, value)?),
            "measure" | "measures" => {
                self.measures = value.split(',').map(|s| s.trim().to_lowercase()).collect()
            }
            "beta-min" => self.beta_min = scalar(key, value)?,
            "beta-max" => self.beta_max = scalar(key, value)?,
            "beta-points" => self.beta_points = scalar(key, value)?,
            "tuples" => self.tuples = scalar(key, value)?,
            "seed" => self.seed = scalar(key, value)?,
            "flip-pairing" => self.flip_pairing = scalar(key, value)?,
            "fit-block" => self.fit_block = scalar(key, value)?,
            "fit-tail" => self.fit_tail = scalar(key, value)?,
            "trace-norm" => {
                self.half_trace_distance = match value.trim() {
                    "full" => false,
                    "half" => true,
                    _ => return Err(bad(key, value)),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Fills unset grids with the defaults of `command`.
    pub fn resolve(&mut self, command: &str) {
        let grid = |text: &str| parse_grid("tau", text).expect("built-in grid");
        let (tau, n_max, sizes) = match command {
            "revival" => (vec![0.3], None, vec![100, 150, 200, 250]),
            "relax" => (vec![0.3, 0.7, 0.9, 1.5, 2.0, 2.5], Some(5000), vec![]),
            "sweep" => (grid("0.05:30:0.05"), None, vec![]),
            "ergodicity" => (grid("0.1:30:0.1"), None, vec![]),
            "validate" => (vec![], Some(50), vec![8]),
            _ => (vec![], None, vec![]),
        };
        self.tau.get_or_insert(tau);
        self.b.get_or_insert(vec![0.0]);
        self.sizes.get_or_insert(sizes);
        if self.n_max.is_none() {
            self.n_max = n_max;
        }
    }

    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> Result<(), ConfigError> {
        pairs.iter().try_for_each(|(k, v)| self.set(k, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("tau", "0.3").unwrap(), vec![0.3]);
        assert_eq!(parse_grid("tau", "0.3, 0.7").unwrap(), vec![0.3, 0.7]);
        let g = parse_grid("tau", "2:3:0.5").unwrap();
        assert_eq!(g, vec![2.0, 2.5, 3.0]);
        assert!(parse_grid("tau", "3:2:0.5").is_err());
        assert!(parse_grid("tau", "1:2").is_err());
    }

    #[test]
    fn later_sources_win() {
        let mut c = RunConfig::default();
        let mut file = BTreeMap::new();
        file.insert("a".to_string(), "0.5".to_string());
        file.insert("n_max".to_string(), "100".to_string());
        c.apply(&file).unwrap();
        c.set("a", "0.9").unwrap();
        assert_eq!(c.a, 0.9);
        assert_eq!(c.n_max, Some(100));
        assert!(matches!(c.set("bogus", "1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(c.set("beta", "warm"), Err(ConfigError::BadValue { .. })));
        c.set("trace_norm", "half").unwrap();
        assert!(c.half_trace_distance);
        assert!(c.set("trace-norm", "double").is_err());
    }
}
