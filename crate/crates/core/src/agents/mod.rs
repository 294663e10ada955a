//! The five controllers benchmarked against each other.

mod calf;
mod mpc;
mod nominal;
mod sarsa;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use calf::{calf_step, CalfAgent};
pub use mpc::{mpc_policy, MpcAgent};
pub use nominal::{nominal_policy, polar_transform, PolarState, StabilizerGains};
pub use sarsa::{sarsa_step, SarsaAgent, SarsaVariant};

use crate::critic::{q_value, CriticWeights, Ledger};
use crate::dynamics::{Action, Plant, State};
use crate::error::{CalfError, Result};
use crate::objective::Transition;
use crate::solvers::{minimize_over_action_box, ActionBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Calf,
    Sarsa,
    SarsaM,
    Nominal,
    Mpc(usize),
}

impl AgentKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            AgentKind::Mpc(h) if *h < 2 => Err(CalfError::Config(format!(
                "MPC horizon must be at least 2, got {h}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_learning(&self) -> bool {
        matches!(self, AgentKind::Calf | AgentKind::Sarsa | AgentKind::SarsaM)
    }

    /// Whether the ledger monitors (decay, update-count bound) apply.
    pub fn has_ledger_guarantees(&self) -> bool {
        matches!(self, AgentKind::Calf | AgentKind::SarsaM)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentKind::Calf => f.write_str("calf"),
            AgentKind::Sarsa => f.write_str("sarsa"),
            AgentKind::SarsaM => f.write_str("sarsa-m"),
            AgentKind::Nominal => f.write_str("nominal"),
            AgentKind::Mpc(h) => write!(f, "mpc{h}"),
        }
    }
}

impl FromStr for AgentKind {
    type Err = CalfError;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "calf" => AgentKind::Calf,
            "sarsa" => AgentKind::Sarsa,
            "sarsa-m" | "sarsam" => AgentKind::SarsaM,
            "nominal" => AgentKind::Nominal,
            other => match other.strip_prefix("mpc") {
                Some(h) => AgentKind::Mpc(h.trim_start_matches('-').parse().map_err(|_| {
                    CalfError::Config(format!("bad MPC horizon in agent name {other:?}"))
                })?),
                None => return Err(CalfError::Config(format!("unknown agent {other:?}"))),
            },
        };
        Ok(kind)
    }
}

impl Serialize for AgentKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AgentKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What happened at one control step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Episode start: ledger initialized, stabilizer action taken.
    Init,
    /// Constrained critic update succeeded; the greedy action fired.
    Critic,
    /// Critic update failed; stabilizer action taken.
    Fallback,
    /// Inside the goal gate; critic not consulted.
    Gate,
    /// SARSA update whose weights entered the ledger.
    Accept,
    /// SARSA-m update whose weights failed the post-hoc check.
    Reject,
    /// Agent without a critic.
    None,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Init => "init",
            Verdict::Critic => "critic",
            Verdict::Fallback => "fallback",
            Verdict::Gate => "gate",
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
            Verdict::None => "none",
        }
    }

    /// Steps at which the ledger received new weights.
    pub fn is_success(&self) -> bool {
        matches!(self, Verdict::Critic | Verdict::Accept)
    }
}

impl FromStr for Verdict {
    type Err = CalfError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "init" => Verdict::Init,
            "critic" => Verdict::Critic,
            "fallback" => Verdict::Fallback,
            "gate" => Verdict::Gate,
            "accept" => Verdict::Accept,
            "reject" => Verdict::Reject,
            "none" => Verdict::None,
            other => return Err(CalfError::Config(format!("unknown verdict {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub verdict: Verdict,
    /// Ledger value after this step, for critic-based agents.
    pub q_dagger: Option<f64>,
}

/// Greedy action of `Q̂^w(state, ·)` over the admissible box.
pub fn greedy_action(w: &CriticWeights, state: &State, plant: &Plant) -> Action {
    let bx = ActionBox::at_state(state, &plant.dynamics, &plant.zone);
    minimize_over_action_box(|a| q_value(w, state, a), &bx)
}

/// Uniform draw from the admissible box.
pub fn random_action<R: Rng + ?Sized>(state: &State, plant: &Plant, rng: &mut R) -> Action {
    let bx = ActionBox::at_state(state, &plant.dynamics, &plant.zone);
    bx.lerp(rng.random::<f64>(), rng.random::<f64>())
}

/// Pushes completed on-policy records into `buffer`: the transition held
/// from the previous call gets `prev.action` as its successor action.
pub(crate) fn absorb_transition(
    pending: &mut Option<Transition>,
    buffer: &mut crate::critic::ReplayBuffer,
    prev: Option<&Transition>,
) {
    if let Some(tr) = prev {
        if let Some(done) = pending.take() {
            buffer.push(done, tr.action);
        }
        *pending = Some(*tr);
    }
}

/// Carried weights are reused at an episode start only if they already sit in
/// the κ sandwich there.
pub(crate) fn episode_weights(
    carried: Option<CriticWeights>,
    s0: &State,
    a0: &Action,
    cfg: &crate::critic::CalfConfig,
) -> Result<CriticWeights> {
    if let Some(w) = carried {
        if crate::critic::kappa_bounds_ok(cfg, s0, q_value(&w, s0, a0)) {
            return Ok(w);
        }
    }
    crate::critic::init_weights(s0, a0, cfg)
}

/// One agent instance, carried across the episodes of a seed.
#[derive(Debug, Clone)]
pub enum Agent {
    Calf(CalfAgent),
    Sarsa(SarsaAgent),
    Nominal {
        gains: StabilizerGains,
        plant: Plant,
    },
    Mpc(MpcAgent),
}

impl Agent {
    pub fn begin_episode(&mut self) {
        match self {
            Agent::Calf(a) => a.begin_episode(),
            Agent::Sarsa(a) => a.begin_episode(),
            Agent::Nominal { .. } => {}
            Agent::Mpc(a) => a.begin_episode(),
        }
    }

    pub fn act<R: Rng + ?Sized>(
        &mut self,
        state: &State,
        prev: Option<&Transition>,
        rng: &mut R,
    ) -> Result<Decision> {
        match self {
            Agent::Calf(a) => calf_step(a, state, prev, rng),
            Agent::Sarsa(a) => sarsa_step(a, state, prev, rng),
            Agent::Nominal { gains, plant } => Ok(Decision {
                action: nominal_policy(state, gains, plant),
                verdict: Verdict::None,
                q_dagger: None,
            }),
            Agent::Mpc(a) => Ok(Decision {
                action: a.act(state, rng),
                verdict: Verdict::None,
                q_dagger: None,
            }),
        }
    }

    pub fn ledger(&self) -> Option<&Ledger> {
        match self {
            Agent::Calf(a) => a.ledger(),
            Agent::Sarsa(a) => a.ledger(),
            _ => None,
        }
    }
}
