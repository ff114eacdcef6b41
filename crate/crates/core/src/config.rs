//! Flat `key = value` run configuration.
//!
//! ```text
//! # risk aversion and graph threshold
//! gamma = 0.5
//! alpha = 0.25
//! method = lssa-mis-random
//! ng = 8
//! solver = sa
//! sa.sweeps = 2000
//! vqe.shots = 2048
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lssa::{Method, MethodParams, PipelineSettings};
use crate::solvers::{AnnealSchedule, SolverChoice, TabuParams};
use crate::vqe::RecombinerConfig;

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "PORTOPT_SEED";

/// Parsed `key = value` lines, in key order. `#` starts a comment line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
        }
        Ok(KeyValues(map))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::parse(&text)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }
}

pub(crate) fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    #[default]
    Sa,
    Tabu,
}

/// Every tunable of a pipeline run. Group size and sample count default to
/// `ceil(n / 2)` once the problem size is known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub gamma: f64,
    pub alpha: f64,
    pub ng: Option<usize>,
    pub ns: Option<usize>,
    pub solver: SolverKind,
    pub sa: AnnealSchedule,
    pub tabu: TabuParams,
    pub vqe: RecombinerConfig,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::LssaMisRandom,
            gamma: 0.5,
            alpha: 0.25,
            ng: None,
            ns: None,
            solver: SolverKind::Sa,
            sa: AnnealSchedule::default(),
            tabu: TabuParams::default(),
            vqe: RecombinerConfig::default(),
            seed: None,
        }
    }
}

impl RunConfig {
    /// Applies one setting; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "method" => self.method = value.parse()?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "ng" => self.ng = Some(parse_value(key, value)?),
            "ns" => self.ns = Some(parse_value(key, value)?),
            "seed" => self.seed = Some(parse_value(key, value)?),
            "solver" => {
                self.solver = match value {
                    "exact" => SolverKind::Exact,
                    "sa" => SolverKind::Sa,
                    "tabu" => SolverKind::Tabu,
                    other => return Err(Error::Config(format!("unknown solver {other:?}"))),
                }
            }
            "sa.sweeps" => self.sa.sweeps = parse_value(key, value)?,
            "sa.beta_initial" => self.sa.beta_initial = parse_value(key, value)?,
            "sa.beta_final" => self.sa.beta_final = parse_value(key, value)?,
            "sa.restarts" => self.sa.restarts = parse_value(key, value)?,
            "tabu.max_iter" => self.tabu.max_iter = parse_value(key, value)?,
            "tabu.tenure" => self.tabu.tenure = Some(parse_value(key, value)?),
            "vqe.layers" => self.vqe.layers = parse_value(key, value)?,
            "vqe.budget" => self.vqe.budget = parse_value(key, value)?,
            "vqe.shots" => self.vqe.shots = value.parse()?,
            "vqe.seed" => self.vqe.seed = Some(parse_value(key, value)?),
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        kv.iter().try_for_each(|(k, v)| self.set(k, v))
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut c = RunConfig::default();
        c.apply(kv)?;
        Ok(c)
    }

    /// Explicit seed, else `PORTOPT_SEED`, else 0.
    pub fn resolved_seed(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => parse_value(SEED_ENV, v.trim()),
            Err(_) => Ok(0),
        }
    }

    pub fn solver_choice(&self) -> SolverChoice {
        match self.solver {
            SolverKind::Exact => SolverChoice::Exact,
            SolverKind::Sa => SolverChoice::Sa(self.sa),
            SolverKind::Tabu => SolverChoice::Tabu(self.tabu),
        }
    }

    /// Fills in defaults for a problem of `n` variables and checks that the
    /// parameters are consistent, before any solving happens.
    pub fn resolve(&self, n: usize) -> Result<(MethodParams, PipelineSettings)> {
        let half = n.div_ceil(2).max(1);
        let n_g = self.ng.unwrap_or(half);
        let n_s = self.ns.unwrap_or(half);
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if n_g == 0 || n_g > n {
            return Err(Error::Config(format!("ng must lie in 1..={n}, got {n_g}")));
        }
        if self.method.samples_randomly() && n_s * n_g < n {
            return Err(Error::Coverage(format!(
                "ns * ng = {} < {n}; ns must be at least {}",
                n_s * n_g,
                n.div_ceil(n_g)
            )));
        }
        self.sa.validate()?;
        self.tabu.validate()?;
        self.vqe.validate()?;
        let params = MethodParams {
            method: self.method,
            gamma: self.gamma,
            alpha: self.alpha,
            n_g,
            n_s,
        };
        let settings = PipelineSettings {
            solver: self.solver_choice(),
            recombiner: self.vqe,
            seed: self.resolved_seed()?,
            classical_energy: None,
        };
        Ok((params, settings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vqe::Shots;

    #[test]
    fn parses_comments_and_whitespace() {
        let kv = KeyValues::parse("# run\n\ngamma = 0.7\n  alpha=0.3  \nvqe.shots = 2048\n").unwrap();
        let c = RunConfig::from_key_values(&kv).unwrap();
        assert_eq!(c.gamma, 0.7);
        assert_eq!(c.alpha, 0.3);
        assert_eq!(c.vqe.shots, Shots::Count(2048));
    }

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!((c.gamma, c.alpha), (0.5, 0.25));
        assert_eq!(c.vqe.shots, Shots::Exact);
        let (p, _) = RunConfig { seed: Some(1), ..c }.resolve(9).unwrap();
        assert_eq!((p.n_g, p.n_s), (5, 5));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(KeyValues::parse("gamma 0.5").is_err());
        assert!(KeyValues::parse("a = 1\na = 2").is_err());
        let kv = KeyValues::parse("colour = blue").unwrap();
        assert!(matches!(RunConfig::from_key_values(&kv), Err(Error::Config(_))));
        let kv = KeyValues::parse("gamma = lots").unwrap();
        assert!(RunConfig::from_key_values(&kv).is_err());
    }

    #[test]
    fn coverage_guard_only_for_random_sampling() {
        let c = RunConfig {
            method: Method::LssaRandom,
            ng: Some(4),
            ns: Some(1),
            seed: Some(0),
            ..RunConfig::default()
        };
        assert!(matches!(c.resolve(8), Err(Error::Coverage(_))));
        let c = RunConfig {
            method: Method::LssaMis,
            ..c
        };
        assert!(c.resolve(8).is_ok());
    }

    #[test]
    fn solver_blocks() {
        let kv = KeyValues::parse("solver = tabu\ntabu.max_iter = 10\ntabu.tenure = 3").unwrap();
        let c = RunConfig::from_key_values(&kv).unwrap();
        assert_eq!(
            c.solver_choice(),
            SolverChoice::Tabu(TabuParams {
                max_iter: 10,
                tenure: Some(3),
                seed: 0
            })
        );
    }
}
