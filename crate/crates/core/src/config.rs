//! Experiment configuration files.
//!
//! A config file is JSON with every field optional; command-line flags fill
//! or override fields, then [`ConfigFile::resolve`] checks ranges against a
//! game and produces an [`ExperimentConfig`]. Defaults: harmonic step sizes,
//! `e = 0.1`, `rho = 0.05`, `eta = 0.2`, offline check every phase, solver
//! tolerance `1e-10`. `delta` has no default: give it, or set `auto_delta`
//! to use half of the computed bar-delta.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::{ExperimentConfig, ExperimentError, PhaseLengths};
use crate::game::Game;
use crate::learner::{LearnerParams, Objective, StepSchedule, ValueBox};
use crate::policy::JointGridPolicy;
use crate::solver::{compute_bar_delta, SolverError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("field `{field}` out of range: {detail}")]
    Range { field: String, detail: String },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl ConfigError {
    /// Name of the offending field, for range and missing-field errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Missing(f) => Some(f),
            ConfigError::Range { field, .. } => Some(field),
            _ => None,
        }
    }
}

impl From<ExperimentError> for ConfigError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Range { field, detail } => ConfigError::Range { field, detail },
            ExperimentError::Learner(crate::learner::LearnerError::OutOfRange { field, value, expected }) => {
                ConfigError::Range {
                    field: field.to_string(),
                    detail: format!("{value} not in {expected}"),
                }
            }
            other => ConfigError::Range {
                field: "config".into(),
                detail: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<StepSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_box: Option<ValueBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_box: Option<ValueBox>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_length: Option<PhaseLengths>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub learner: LearnerFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_delta: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<JointGridPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_diagnostics: Option<bool>,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

fn pick<T>(over: Option<T>, base: Option<T>) -> Option<T> {
    over.or(base)
}

impl ConfigFile {
    pub fn from_json_str(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(s).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merged(self, over: ConfigFile) -> ConfigFile {
        let l = self.learner;
        let o = over.learner;
        ConfigFile {
            game: pick(over.game, self.game),
            resolution: pick(over.resolution, self.resolution),
            eps: pick(over.eps, self.eps),
            phases: pick(over.phases, self.phases),
            phase_length: pick(over.phase_length, self.phase_length),
            trials: pick(over.trials, self.trials),
            seed: pick(over.seed, self.seed),
            learner: LearnerFile {
                rho: pick(o.rho, l.rho),
                e: pick(o.e, l.e),
                eta: pick(o.eta, l.eta),
                delta: pick(o.delta, l.delta),
                schedule: pick(o.schedule, l.schedule),
                objective: pick(o.objective, l.objective),
                q_box: pick(o.q_box, l.q_box),
                j_box: pick(o.j_box, l.j_box),
            },
            auto_delta: pick(over.auto_delta, self.auto_delta),
            eval_stride: pick(over.eval_stride, self.eval_stride),
            tol: pick(over.tol, self.tol),
            initial: pick(over.initial, self.initial),
            q_diagnostics: pick(over.q_diagnostics, self.q_diagnostics),
        }
    }

    /// Fill defaults, compute `delta` if requested, and range-check
    /// everything against `game`.
    pub fn resolve(&self, game: &Game) -> Result<ExperimentConfig, ConfigError> {
        let defaults = LearnerParams::default();
        let resolution = self.resolution.ok_or(ConfigError::Missing("resolution"))?;
        let eps = self.eps.ok_or(ConfigError::Missing("eps"))?;
        let tol = self.tol.unwrap_or(1e-10);
        let delta = match (self.learner.delta, self.auto_delta.unwrap_or(false)) {
            (Some(d), _) => d,
            (None, true) => {
                if resolution == 0 {
                    return Err(ConfigError::Range {
                        field: "resolution".into(),
                        detail: "must be at least 1".into(),
                    });
                }
                let grid = crate::policy::QuantizedPolicySet::new(game.num_actions(0), game.num_states(), resolution)
                    .map_err(|e| ConfigError::Range {
                        field: "resolution".into(),
                        detail: e.to_string(),
                    })?;
                compute_bar_delta(game, &grid, eps, tol)?.bar_delta / 2.0
            }
            (None, false) => return Err(ConfigError::Missing("learner.delta")),
        };
        let cfg = ExperimentConfig {
            resolution,
            phases: self.phases.ok_or(ConfigError::Missing("phases"))?,
            phase_length: self.phase_length.clone().ok_or(ConfigError::Missing("phase_length"))?,
            trials: self.trials.unwrap_or(1),
            seed: self.seed.ok_or(ConfigError::Missing("seed"))?,
            learner: LearnerParams {
                rho: self.learner.rho.unwrap_or(defaults.rho),
                e: self.learner.e.unwrap_or(defaults.e),
                eta: self.learner.eta.unwrap_or(defaults.eta),
                delta,
                eps,
                schedule: self.learner.schedule.unwrap_or_default(),
                objective: self.learner.objective.unwrap_or_default(),
                q_box: self.learner.q_box,
                j_box: self.learner.j_box,
            },
            per_player: vec![],
            eval_stride: self.eval_stride.unwrap_or(1),
            tol,
            initial: self.initial.clone(),
            q_diagnostics: self.q_diagnostics.unwrap_or(false),
        };
        cfg.validate(game)?;
        Ok(cfg)
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ConfigFile, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ConfigFile::from_json_str(&text)
}

/// Sidecar path holding the effective config of a run written to `out`:
/// `run.csv` -> `run.config.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("config.json")
}

/// Write the effective config next to `out`.
pub fn write_sidecar(out: &Path, cfg: &ExperimentConfig) -> std::io::Result<PathBuf> {
    let path = sidecar_path(out);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).expect("config serializes"))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games;

    const MINIMAL: &str = r#"{ "resolution": 10, "eps": 0.2, "phases": 5, "phase_length": 100, "seed": 1,
        "learner": { "delta": 0.005 } }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let g = games::rock_paper_scissors(0.0);
        let cfg = ConfigFile::from_json_str(MINIMAL).unwrap().resolve(&g).unwrap();
        assert_eq!(cfg.learner.e, 0.1);
        assert_eq!(cfg.learner.rho, 0.05);
        assert_eq!(cfg.learner.eta, 0.2);
        assert_eq!(cfg.learner.schedule, StepSchedule::Harmonic);
        assert_eq!(cfg.learner.schedule.step(0), 1.0);
        assert_eq!(cfg.trials, 1);
    }

    #[test]
    fn delta_required_unless_auto() {
        let g = games::rock_paper_scissors(0.0);
        let mut f = ConfigFile::from_json_str(MINIMAL).unwrap();
        f.learner.delta = None;
        assert_eq!(f.resolve(&g).unwrap_err().field(), Some("learner.delta"));
        f.auto_delta = Some(true);
        let cfg = f.resolve(&g).unwrap();
        assert!((cfg.learner.delta - 0.005).abs() < 1e-9);
    }

    #[test]
    fn range_errors_name_the_field() {
        let g = games::rock_paper_scissors(0.0);
        let f = ConfigFile::from_json_str(MINIMAL).unwrap().merged(ConfigFile {
            learner: LearnerFile {
                rho: Some(1.5),
                ..Default::default()
            },
            ..Default::default()
        });
        assert_eq!(f.resolve(&g).unwrap_err().field(), Some("rho"));
    }

    #[test]
    fn zero_phases_accepted() {
        let g = games::rock_paper_scissors(0.0);
        let f = ConfigFile::from_json_str(MINIMAL).unwrap().merged(ConfigFile {
            phases: Some(0),
            ..Default::default()
        });
        assert_eq!(f.resolve(&g).unwrap().phases, 0);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ConfigFile::from_json_str("{\n  \"resolution\": 10,\n  \"bogus\": 1\n}").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 3, .. }), "{err}");
        let err = ConfigFile::from_json_str("{ \"eps\": \"x\" }").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn serialize_load_round_trip() {
        let f = ConfigFile::from_json_str(MINIMAL).unwrap();
        assert_eq!(ConfigFile::from_json_str(&f.to_json()).unwrap(), f);
        let full = f.merged(ConfigFile {
            phase_length: Some(PhaseLengths::Schedule(vec![10, 20])),
            learner: LearnerFile {
                schedule: Some(StepSchedule::Power { exponent: 0.8 }),
                objective: Some(Objective::Max),
                ..Default::default()
            },
            ..Default::default()
        });
        assert_eq!(ConfigFile::from_json_str(&full.to_json()).unwrap(), full);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/run.csv")), Path::new("out/run.config.json"));
    }
}
