use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{
    Agent, AgentKind, CalfAgent, MpcAgent, SarsaAgent, SarsaVariant, StabilizerGains,
};
use crate::critic::CalfConfig;
use crate::dynamics::{DynamicsConfig, Plant, State};
use crate::error::{CalfError, Result};
use crate::objective::{GoalSpec, HotspotParams};
use crate::solvers::CemConfig;

pub const DEFAULT_SARSA_EPSILON: f64 = 0.15;

/// Everything needed to reproduce a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub agent: AgentKind,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub episode_len: usize,
    /// Root of the per-seed random streams.
    pub master_seed: u64,
    pub start: State,
    /// Exploration probability; `None` picks the agent's default
    /// (0 for CALF, 0.15 for the SARSA variants).
    pub epsilon: Option<f64>,
    pub output_dir: PathBuf,
    pub dynamics: DynamicsConfig,
    pub hotspot: HotspotParams,
    pub goal: GoalSpec,
    pub calf: CalfConfig,
    pub cem: CemConfig,
    pub gains: StabilizerGains,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            agent: AgentKind::Calf,
            seeds: (0..25).collect(),
            episodes: 20,
            episode_len: 300,
            master_seed: 0,
            start: State::new(-1.0, -1.0, FRAC_PI_2),
            epsilon: None,
            output_dir: PathBuf::from("out"),
            dynamics: DynamicsConfig::default(),
            hotspot: HotspotParams::default(),
            goal: GoalSpec::default(),
            calf: CalfConfig::default(),
            cem: CemConfig::default(),
            gains: StabilizerGains::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        if self.seeds.is_empty() {
            return Err(CalfError::Config("seed list is empty".into()));
        }
        if self.episodes == 0 || self.episode_len == 0 {
            return Err(CalfError::Config(
                "episodes and episode_len must be at least 1".into(),
            ));
        }
        if !self.start.is_finite() {
            return Err(CalfError::Config(format!(
                "non-finite start pose {:?}",
                self.start
            )));
        }
        if let Some(e) = self.epsilon {
            if !(0.0..=1.0).contains(&e) {
                return Err(CalfError::Config(format!("epsilon {e} outside [0, 1]")));
            }
        }
        self.dynamics.validate()?;
        self.hotspot.validate()?;
        self.goal.validate()?;
        self.calf.validate()?;
        self.cem.validate()?;
        self.gains.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CalfError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CalfError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| CalfError::Parse {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn plant(&self) -> Plant {
        Plant::new(self.dynamics, self.hotspot)
    }

    pub fn effective_epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(match self.agent {
            AgentKind::Sarsa | AgentKind::SarsaM => DEFAULT_SARSA_EPSILON,
            _ => 0.0,
        })
    }

    /// A fresh agent, as at the start of a seed.
    pub fn build_agent(&self) -> Agent {
        let plant = self.plant();
        let eps = self.effective_epsilon();
        match self.agent {
            AgentKind::Calf => Agent::Calf(CalfAgent::new(self.calf, self.gains, plant, eps)),
            AgentKind::Sarsa => {
                Agent::Sarsa(SarsaAgent::new(SarsaVariant::Plain, self.calf, plant, eps))
            }
            AgentKind::SarsaM => {
                Agent::Sarsa(SarsaAgent::new(SarsaVariant::M, self.calf, plant, eps))
            }
            AgentKind::Nominal => Agent::Nominal {
                gains: self.gains,
                plant,
            },
            AgentKind::Mpc(h) => Agent::Mpc(MpcAgent::new(h, self.cem, plant, self.hotspot)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.seeds.len(), 25);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "agent = \"mpc10\"\nseeds = [3]\n[calf]\nnu_bar = 0.05\n",
        )
        .unwrap();
        assert_eq!(cfg.agent, AgentKind::Mpc(10));
        assert_eq!(cfg.calf.nu_bar, 0.05);
        assert_eq!(cfg.calf.c_up, CalfConfig::default().c_up);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("agnet = \"calf\"").is_err());
        assert!(ExperimentConfig::from_toml_str("[calf]\nnubar = 1.0").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("seeds = []").is_err());
        assert!(ExperimentConfig::from_toml_str("episode_len = 0").is_err());
        assert!(ExperimentConfig::from_toml_str("epsilon = 1.5").is_err());
        assert!(ExperimentConfig::from_toml_str("agent = \"mpc1\"").is_err());
    }

    #[test]
    fn epsilon_defaults_per_agent() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.effective_epsilon(), 0.0);
        cfg.agent = AgentKind::SarsaM;
        assert_eq!(cfg.effective_epsilon(), 0.15);
        cfg.epsilon = Some(0.3);
        assert_eq!(cfg.effective_epsilon(), 0.3);
    }
}
