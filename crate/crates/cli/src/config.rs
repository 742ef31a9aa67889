//! Experiment configuration: a flat TOML table, command-line overrides and
//! per-experiment validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("override `{0}` is not of the form key=value")]
    MalformedOverride(String),
    #[error("key `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
    #[error("key `{0}` is required for this experiment")]
    Missing(&'static str),
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Fig1,
    GapTrace,
    Evolve,
    TauSweep,
    EpScan,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [Self::Fig1, Self::GapTrace, Self::Evolve, Self::TauSweep, Self::EpScan];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1 => "fig1",
            Self::GapTrace => "gap-trace",
            Self::Evolve => "evolve",
            Self::TauSweep => "tau-sweep",
            Self::EpScan => "ep-scan",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    TwoLevel,
    Ising,
}

/// How entries of `tau_list` are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauUnits {
    #[default]
    Absolute,
    /// Multiples of `g_m^-2`, with `g_m` the minimum gap of the configured spec.
    InverseGapSquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialStateKind {
    #[default]
    Full,
    Driver,
}

/// One flat table; keys are documented in the README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub model: ModelKind,
    pub n_qubits: Option<u32>,
    pub n_list: Option<Vec<u32>>,
    pub seed: u64,
    pub fields: Option<Vec<f64>>,
    /// `[i, j, J_ij]` triples.
    pub couplings: Option<Vec<[f64; 3]>>,
    pub j_star: f64,
    pub cos_alpha: Option<f64>,
    pub delta0: f64,
    pub delta0_list: Option<Vec<f64>>,
    pub decaying_driver: bool,
    pub tau: f64,
    pub tau_list: Option<Vec<f64>>,
    pub tau_units: TauUnits,
    pub initial_state: InitialStateKind,
    pub delta_qubit: Option<f64>,
    pub grid_points: usize,
    pub samples: usize,
    pub tolerance: f64,
    pub max_steps: usize,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            model: ModelKind::TwoLevel,
            n_qubits: None,
            n_list: None,
            seed: 0,
            fields: None,
            couplings: None,
            j_star: 1.0,
            cos_alpha: None,
            delta0: 0.0,
            delta0_list: None,
            decaying_driver: false,
            tau: 10.0,
            tau_list: None,
            tau_units: TauUnits::Absolute,
            initial_state: InitialStateKind::Full,
            delta_qubit: None,
            grid_points: nhaqo_core::spectrum::DEFAULT_GRID_POINTS,
            samples: nhaqo_core::evolve::DEFAULT_SAMPLES,
            tolerance: nhaqo_core::evolve::DEFAULT_TOLERANCE,
            max_steps: nhaqo_core::evolve::DEFAULT_MAX_STEPS,
            output_path: None,
        }
    }
}

/// Qubit count implied for `fig1` when none is given: `sin(alpha) = 2^-10`.
pub const FIG1_DEFAULT_QUBITS: u32 = 20;

impl ExperimentConfig {
    /// Parses a TOML document.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads `path` (if any), applies `key=value` overrides and returns the
    /// merged config. Overrides win over the file, the file over defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                text.parse::<toml::Table>()
                    .map_err(|e| ConfigError::Parse(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, value) = parse_override(item)?;
            table.insert(key, value);
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_toml().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn delta0_values(&self) -> Vec<f64> {
        self.delta0_list.clone().unwrap_or_else(|| vec![self.delta0])
    }

    pub fn tau_values(&self) -> Vec<f64> {
        self.tau_list.clone().unwrap_or_else(|| vec![self.tau])
    }

    /// `cos(alpha)` for two-level models: explicit, or `sqrt(1 - 2^-n)` so
    /// that `sin(alpha) = 2^(-n/2)`, or aligned when no `n` is known.
    pub fn two_level_cos_alpha(&self, n: Option<u32>) -> f64 {
        match (self.cos_alpha, n) {
            (Some(c), _) => c,
            (None, Some(n)) => (1.0 - 2f64.powi(-(n as i32))).sqrt(),
            (None, None) => 1.0,
        }
    }

    /// Checks the keys that `experiment` needs before anything is computed.
    pub fn validate(&self, experiment: Experiment) -> Result<(), ConfigError> {
        positive("j_star", self.j_star)?;
        if self.grid_points < 2 {
            return Err(invalid("grid_points", "must be at least 2"));
        }
        if let Some(c) = self.cos_alpha {
            if !(-1.0..=1.0).contains(&c) {
                return Err(invalid("cos_alpha", "must lie in [-1, 1]"));
            }
        }
        for d in self.delta0_values() {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(invalid("delta0", format!("{d} is not a finite non-negative number")));
            }
        }
        if let Some(list) = &self.delta0_list {
            if list.is_empty() {
                return Err(invalid("delta0_list", "must not be empty"));
            }
        }
        if let Some(dq) = self.delta_qubit {
            if !(dq >= 0.0 && dq.is_finite()) {
                return Err(invalid("delta_qubit", "must be finite and non-negative"));
            }
        }
        if self.model == ModelKind::Ising
            && matches!(
                experiment,
                Experiment::GapTrace | Experiment::Evolve | Experiment::EpScan
            )
        {
            let n = self.n_qubits.ok_or(ConfigError::Missing("n_qubits"))?;
            if n == 0 || n > 12 {
                return Err(invalid("n_qubits", "must be between 1 and 12"));
            }
            if let Some(f) = &self.fields {
                if f.len() != n as usize {
                    return Err(invalid("fields", format!("expected {n} entries, found {}", f.len())));
                }
            }
            for c in self.couplings.iter().flatten() {
                let ok = |x: f64| x >= 0.0 && x.fract() == 0.0 && (x as u32) < n;
                if !ok(c[0]) || !ok(c[1]) || c[0] == c[1] {
                    return Err(invalid("couplings", format!("bad qubit pair ({}, {})", c[0], c[1])));
                }
            }
        }
        match experiment {
            Experiment::Fig1 | Experiment::GapTrace | Experiment::EpScan => {}
            Experiment::Evolve => {
                for t in self.tau_values() {
                    positive("tau", t)?;
                }
                if self.tau_list.as_ref().is_some_and(|l| l.is_empty()) {
                    return Err(invalid("tau_list", "must not be empty"));
                }
                positive("tolerance", self.tolerance)?;
                if self.max_steps == 0 {
                    return Err(invalid("max_steps", "must be positive"));
                }
                if self.samples < 2 {
                    return Err(invalid("samples", "must be at least 2"));
                }
            }
            Experiment::TauSweep => {
                if self.n_list.as_ref().is_some_and(|l| l.is_empty()) {
                    return Err(invalid("n_list", "must not be empty"));
                }
            }
        }
        Ok(())
    }
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("{v} must be positive and finite")))
    }
}

/// Splits `key=value` and reads the value as a TOML literal, falling back
/// to a bare string (so `model=ising` works without quotes).
fn parse_override(item: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| ConfigError::MalformedOverride(item.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::MalformedOverride(item.to_string()));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_take_precedence() {
        let dir = std::env::temp_dir().join(format!("nhaqo-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "delta0 = 0.5\nseed = 3\n").unwrap();
        let cfg = ExperimentConfig::load(Some(&path), &["seed=9".into(), "model=ising".into()]).unwrap();
        assert_eq!(cfg.delta0, 0.5);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.model, ModelKind::Ising);
        assert_eq!(cfg.j_star, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml("delta = 1.0"),
            Err(ConfigError::Parse(_))
        ));
        assert!(ExperimentConfig::load(None, &["nonsense".into()]).is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig {
            experiment: Some(Experiment::TauSweep),
            n_list: Some(vec![4, 10]),
            delta0_list: Some(vec![0.01, 1.0]),
            couplings: Some(vec![[0.0, 1.0, -0.5]]),
            delta_qubit: Some(0.1),
            ..Default::default()
        };
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn validation() {
        let ising = ExperimentConfig {
            model: ModelKind::Ising,
            ..Default::default()
        };
        assert!(matches!(
            ising.validate(Experiment::GapTrace),
            Err(ConfigError::Missing("n_qubits"))
        ));
        let bad = ExperimentConfig {
            tau_list: Some(vec![1.0, -2.0]),
            ..Default::default()
        };
        assert!(bad.validate(Experiment::Evolve).is_err());
        assert!(bad.validate(Experiment::Fig1).is_ok());
    }

    #[test]
    fn default_cos_alpha_tracks_qubits() {
        let cfg = ExperimentConfig::default();
        let c = cfg.two_level_cos_alpha(Some(20));
        assert!(((1.0 - c * c).sqrt() - 2f64.powi(-10)).abs() < 1e-12);
        assert_eq!(cfg.two_level_cos_alpha(None), 1.0);
    }
}
