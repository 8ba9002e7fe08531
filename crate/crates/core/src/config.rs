//! Run configuration files: parsing, validation and the provenance digest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fspec::FSpec;
use crate::measures::{CharQuadruple, DislocationAtom, DislocationMeasure, LevyMeasure, MassPartition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    Homogeneous,
    SelfSimilar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub mode: ModelMode,
    #[serde(default)]
    pub sigma2: f64,
    /// Growth rate `c` (homogeneous) or Lévy drift `b` (self-similar).
    #[serde(default)]
    pub drift: f64,
    #[serde(default)]
    pub kill: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default, rename = "atom")]
    pub atoms: Vec<AtomSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub horizon: f64,
    pub floor: f64,
    pub cap: usize,
    pub replicas: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection { horizon: 8.0, floor: 1e-6, cap: 1_000_000, replicas: 10_000, step: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub q_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub epsilon: Vec<f64>,
    #[serde(rename = "f")]
    pub f_specs: Vec<FSpec>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            q_grid: vec![0.5, 1.0, 1.5, 2.0],
            t_grid: vec![1.0, 2.0, 4.0, 8.0],
            epsilon: vec![1e-3],
            f_specs: vec![FSpec::one(), FSpec::closed(0.5, 2.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: ModelSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Parses and validates, reporting every violation at once.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let problems = cfg.violations();
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Validation(problems))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        digest(self)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.seed > i64::MAX as u64 {
            v.push(format!("seed = {}: seeds above 2^63 - 1 do not fit a TOML integer", self.seed));
        }
        let m = &self.model;
        if !(m.sigma2.is_finite() && m.sigma2 >= 0.0) {
            v.push(format!("model.sigma2 = {}: sigma2 ≥ 0 required", m.sigma2));
        }
        if !m.drift.is_finite() {
            v.push("model.drift must be finite".into());
        }
        if !(m.kill.is_finite() && m.kill >= 0.0) {
            v.push(format!("model.kill = {}: kill ≥ 0 required", m.kill));
        }
        if m.mode == ModelMode::Homogeneous && m.kill != 0.0 {
            v.push("model.kill must be 0 in homogeneous mode; use a null partition (parts = []) for killing".into());
        }
        if !m.alpha.is_finite() {
            v.push("model.alpha must be finite".into());
        }
        if m.atoms.is_empty() {
            v.push("model needs at least one [[model.atom]]".into());
        }
        for (i, a) in m.atoms.iter().enumerate() {
            let at = format!("model.atom[{i}]");
            if !(a.weight.is_finite() && a.weight > 0.0) {
                v.push(format!("{at}.weight = {}: weights must be positive and finite", a.weight));
            }
            match (m.mode, &a.parts, a.jump) {
                (ModelMode::Homogeneous, Some(parts), None) => {
                    let sum: f64 = parts.iter().sum();
                    if sum > 1.0 + 1e-9 {
                        v.push(format!("{at}.parts sum to {sum} > 1: a dislocation atom must be a mass-partition"));
                    } else if let Err(e) = MassPartition::new(parts) {
                        v.push(format!("{at}.parts: {e}"));
                    } else if parts.len() == 1 && parts[0] == 1.0 {
                        v.push(format!("{at}.parts = [1]: the trivial partition carries no mass"));
                    }
                }
                (ModelMode::SelfSimilar, None, Some(y)) => {
                    if !(y.is_finite() && y != 0.0) {
                        v.push(format!("{at}.jump = {y}: jumps must be finite and nonzero"));
                    }
                }
                (ModelMode::Homogeneous, _, _) => v.push(format!("{at}: homogeneous atoms take `parts` only")),
                (ModelMode::SelfSimilar, _, _) => v.push(format!("{at}: self-similar atoms take `jump` only")),
            }
        }
        let s = &self.simulation;
        if !(s.horizon.is_finite() && s.horizon >= 0.0) {
            v.push(format!("simulation.horizon = {}: must be finite and ≥ 0", s.horizon));
        }
        if !(s.floor.is_finite() && s.floor >= 0.0) {
            v.push(format!("simulation.floor = {}: must be ≥ 0", s.floor));
        }
        if s.cap == 0 {
            v.push("simulation.cap must be positive".into());
        }
        if s.replicas == 0 {
            v.push("simulation.replicas must be positive".into());
        }
        match s.step {
            Some(h) if !(h.is_finite() && h > 0.0) => v.push(format!("simulation.step = {h}: must be positive")),
            None if m.sigma2 > 0.0 => {
                v.push("sigma2 > 0 needs simulation.step (Brownian parts are simulated on a grid)".into())
            }
            _ => {}
        }
        let e = &self.experiment;
        if e.q_grid.iter().any(|q| !(q.is_finite() && *q > 0.0)) {
            v.push("experiment.q_grid entries must be positive".into());
        }
        if e.t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || e.t_grid.windows(2).any(|w| w[1] < w[0]) {
            v.push("experiment.t_grid must be sorted and non-negative".into());
        }
        if e.epsilon.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            v.push("experiment.epsilon entries must be positive".into());
        }
        for (i, f) in e.f_specs.iter().enumerate() {
            if let Err(msg) = f.validate() {
                v.push(format!("experiment.f[{i}]: {msg}"));
            }
        }
        v
    }

    /// The characteristic quadruple of the model section. Call on
    /// validated configs only.
    pub fn quadruple(&self) -> Result<CharQuadruple, ConfigError> {
        let m = &self.model;
        let invalid = |e: crate::measures::MeasureError| ConfigError::Validation(vec![e.to_string()]);
        match m.mode {
            ModelMode::Homogeneous => {
                let atoms = m
                    .atoms
                    .iter()
                    .map(|a| {
                        let parts = a.parts.as_deref().unwrap_or(&[]);
                        Ok(DislocationAtom { weight: a.weight, partition: MassPartition::new(parts)? })
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(invalid)?;
                let nu = DislocationMeasure::new(atoms).map_err(invalid)?;
                CharQuadruple::homogeneous(m.sigma2, m.drift, nu).map_err(invalid)
            }
            ModelMode::SelfSimilar => {
                let pairs: Vec<(f64, f64)> = m.atoms.iter().map(|a| (a.weight, a.jump.unwrap_or(0.0))).collect();
                let levy = LevyMeasure::from_pairs(&pairs).map_err(invalid)?;
                CharQuadruple::self_similar(m.sigma2, m.drift, levy, m.kill).map_err(invalid)
            }
        }
    }
}

/// First 16 hex digits of the SHA-256 of `value` as compact JSON.
pub fn digest<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("serializable");
    let hash = Sha256::digest(json.as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulant::eval_kappa;

    const BIN04: &str = r#"
[model]
mode = "homogeneous"
drift = -0.4

[[model.atom]]
weight = 1.0
parts = [0.5, 0.5]
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = RunConfig::parse(BIN04).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.simulation, SimulationSection::default());
        let quad = cfg.quadruple().unwrap();
        assert!((eval_kappa(&quad, 2.0) - (0.5 - 1.0 + 0.2)).abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig::parse(BIN04).unwrap();
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn all_violations_reported() {
        let text = r#"
[model]
mode = "homogeneous"
sigma2 = -1.0

[[model.atom]]
weight = 1.0
parts = [0.6, 0.5]

[[model.atom]]
weight = 1.0
jump = -0.5
"#;
        let Err(ConfigError::Validation(v)) = RunConfig::parse(text) else {
            panic!("expected validation failure");
        };
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v[0].contains("sigma2 ≥ 0"));
        assert!(v[1].contains("sum to 1.1"));
        assert!(v[2].contains("parts"));
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = RunConfig::parse("[model]\nmode = 3\n").unwrap_err();
        let ConfigError::Parse(msg) = err else { panic!() };
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn self_similar_model() {
        let text = r#"
seed = 7
[model]
mode = "self_similar"
drift = -0.4
alpha = 1.0
[[model.atom]]
weight = 1.0
jump = -0.6931471805599453
[experiment]
f = [{ kind = "interval", lo = 1.0, hi = inf, closed_lo = false }]
"#;
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.experiment.f_specs[0].eval(1e9), 1.0);
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        let quad = cfg.quadruple().unwrap();
        assert!((eval_kappa(&quad, 2.0) + 0.3).abs() < 1e-12);
    }
}
