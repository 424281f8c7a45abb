//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Lists are comma separated.
//! Every key may be overridden by an environment variable `ROUGHCTL_<KEY>`
//! (upper case), and `seed`, `tol` and `out` by command-line flags.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Prefix of environment overrides.
pub const ENV_PREFIX: &str = "ROUGHCTL_";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Int,
    Real,
    Text,
    IntList,
    RealList,
}

/// Every accepted key with its kind and a one-line description.
pub const SCHEMA: &[(&str, &str, &str)] = &[
    ("problem", "text", "registry key: example | degeneracy | random"),
    ("input", "text", "CSV path of a sampled path (header t,v1..vm)"),
    ("alpha", "real", "fractional order in (0,1)"),
    ("alphas", "real list", "fractional orders for the round-trip report"),
    ("p", "real", "p-variation exponent"),
    ("q", "real", "half penalty exponent of the worked example"),
    ("penalty_exponent", "real", "penalty exponent of non-example problems"),
    ("f0", "real", "penalty weight"),
    ("n", "int", "number of grid cells"),
    ("ns", "int list", "grid sizes of a refinement study"),
    ("dim", "int", "driver dimension"),
    ("state_dim", "int", "state dimension"),
    ("horizon", "real", "final time"),
    ("lattice_half_width", "real", "half width of the control lattice"),
    ("lattice_points", "int", "points of the control lattice (odd)"),
    ("steps", "int", "decision blocks"),
    ("refined_points", "int", "lattice points of the refined example run"),
    ("refined_steps", "int", "decision blocks of the refined example run"),
    ("r", "int", "start index of the value"),
    ("x", "real list", "initial state"),
    ("t", "int", "intermediate index of the DPP check"),
    ("probe_r", "int list", "start indices of value probes"),
    ("probe_x", "real list", "states of value probes"),
    ("probes", "int", "number of random probes"),
    ("ladder", "int list", "moving-average widths of the mollification ladder"),
    ("driver_scale", "real", "scale of the random-walk driver"),
    ("lambda0", "real", "diffusion coefficient of the worked example"),
    ("seed", "int", "seed of every random draw"),
    ("tol", "real", "tolerance of the checked invariant"),
    ("out", "text", "output directory"),
];

fn kind_of(key: &str) -> Option<Kind> {
    SCHEMA.iter().find(|(k, _, _)| *k == key).map(|(_, t, _)| match *t {
        "int" => Kind::Int,
        "real" => Kind::Real,
        "int list" => Kind::IntList,
        "real list" => Kind::RealList,
        _ => Kind::Text,
    })
}

fn check_value(key: &str, value: &str, line: usize) -> Result<()> {
    let bad = |what: &str| Error::Config {
        line,
        msg: format!("`{key}` expects {what}, got `{value}`"),
    };
    match kind_of(key) {
        None => Err(Error::Config {
            line,
            msg: format!("unknown key `{key}`"),
        }),
        Some(Kind::Int) => value.parse::<u64>().map(|_| ()).map_err(|_| bad("an integer")),
        Some(Kind::Real) => value.parse::<f64>().map(|_| ()).map_err(|_| bad("a number")),
        Some(Kind::IntList) => value
            .split(',')
            .try_for_each(|v| v.trim().parse::<u64>().map(|_| ()))
            .map_err(|_| bad("a comma-separated list of integers")),
        Some(Kind::RealList) => value
            .split(',')
            .try_for_each(|v| v.trim().parse::<f64>().map(|_| ()))
            .map_err(|_| bad("a comma-separated list of numbers")),
        Some(Kind::Text) => Ok(()),
    }
}

/// Validated key-value settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected `key = value`, got `{body}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            check_value(k, v, line)?;
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::Config {
                    line,
                    msg: format!("duplicate key `{k}`"),
                });
            }
        }
        Ok(Self { values })
    }

    /// Applies `ROUGHCTL_<KEY>` variables; unknown names are rejected (line 0).
    pub fn apply_env(&mut self, vars: impl IntoIterator<Item = (String, String)>) -> Result<()> {
        for (name, value) in vars {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            check_value(&key, &value, 0).map_err(|e| match e {
                Error::Config { msg, .. } => Error::Config {
                    line: 0,
                    msg: format!("{name}: {msg}"),
                },
                other => other,
            })?;
            self.values.insert(key, value);
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: String) -> Result<()> {
        check_value(key, &value, 0)?;
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn real(&self, key: &str, default: f64) -> f64 {
        self.text(key).and_then(|v| v.parse().ok()).unwrap_or(default)
    }

    pub fn int(&self, key: &str, default: usize) -> usize {
        self.text(key).and_then(|v| v.parse().ok()).unwrap_or(default)
    }

    pub fn seed(&self, default: u64) -> u64 {
        self.text("seed").and_then(|v| v.parse().ok()).unwrap_or(default)
    }

    pub fn reals(&self, key: &str, default: &[f64]) -> Vec<f64> {
        match self.text(key) {
            Some(v) => v.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
            None => default.to_vec(),
        }
    }

    pub fn ints(&self, key: &str, default: &[usize]) -> Vec<usize> {
        match self.text(key) {
            Some(v) => v.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
            None => default.to_vec(),
        }
    }

    /// Resolved settings, one `key = value` per line in key order.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_reports_its_line() {
        let err = ExperimentConfig::parse("alpha = 0.5\n# note\nbeta = 2\n").unwrap_err();
        match err {
            Error::Config { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("beta"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_lists() {
        let c = ExperimentConfig::parse("ns = 8, 16 # sizes\nx = -0.5,1\n").unwrap();
        assert_eq!(c.ints("ns", &[]), vec![8, 16]);
        assert_eq!(c.reals("x", &[]), vec![-0.5, 1.0]);
    }

    #[test]
    fn env_overrides_and_rejects() {
        let mut c = ExperimentConfig::parse("n = 8").unwrap();
        c.apply_env([("ROUGHCTL_N".to_string(), "16".to_string()), ("PATH".to_string(), "/bin".to_string())])
            .unwrap();
        assert_eq!(c.int("n", 0), 16);
        assert!(c.apply_env([("ROUGHCTL_NOPE".to_string(), "1".to_string())]).is_err());
        assert!(c.apply_env([("ROUGHCTL_N".to_string(), "x".to_string())]).is_err());
    }
}
