use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{absorb_transition, episode_weights, greedy_action, random_action, Decision, Verdict};
use crate::critic::{
    constraints_hold, unconstrained_update, CalfConfig, CriticWeights, Ledger, ReplayBuffer,
};
use crate::dynamics::{Action, Plant, State};
use crate::error::Result;
use crate::objective::Transition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SarsaVariant {
    /// Every update enters the ledger.
    Plain,
    /// Updates enter the ledger only when the decay and κ constraints hold.
    M,
}

#[derive(Debug, Clone)]
pub struct SarsaAgent {
    pub variant: SarsaVariant,
    pub cfg: CalfConfig,
    pub plant: Plant,
    pub epsilon: f64,
    ledger: Option<Ledger>,
    buffer: ReplayBuffer,
    pending: Option<Transition>,
    carried: Option<CriticWeights>,
}

impl SarsaAgent {
    pub fn new(variant: SarsaVariant, cfg: CalfConfig, plant: Plant, epsilon: f64) -> Self {
        Self {
            variant,
            buffer: ReplayBuffer::new(cfg.buffer_len),
            cfg,
            plant,
            epsilon,
            ledger: None,
            pending: None,
            carried: None,
        }
    }

    pub fn begin_episode(&mut self) {
        if let Some(l) = self.ledger.take() {
            self.carried = Some(*l.weights());
        }
        self.buffer.clear();
        self.pending = None;
    }

    pub fn ledger(&self) -> Option<&Ledger> {
        self.ledger.as_ref()
    }
}

fn explore_or_greedy(
    w: &CriticWeights,
    state: &State,
    plant: &Plant,
    explore: Option<Action>,
) -> Action {
    explore.unwrap_or_else(|| plant.saturate(state, &greedy_action(w, state, plant)))
}

/// One SARSA step: unconstrained TD(1) update, then the ε-greedy action of
/// the ledger weights. The stabilizer is never consulted.
pub fn sarsa_step<R: Rng + ?Sized>(
    agent: &mut SarsaAgent,
    state: &State,
    prev: Option<&Transition>,
    rng: &mut R,
) -> Result<Decision> {
    let explore = if agent.epsilon > 0.0 && rng.random::<f64>() < agent.epsilon {
        Some(random_action(state, &agent.plant, rng))
    } else {
        None
    };

    let Some(ledger) = agent.ledger else {
        let w0 = episode_weights(agent.carried, state, &Action::ZERO, &agent.cfg)?;
        let action = explore_or_greedy(&w0, state, &agent.plant, explore);
        let w0 = episode_weights(Some(w0), state, &action, &agent.cfg)?;
        let ledger = Ledger::new(w0, *state, action);
        agent.ledger = Some(ledger);
        return Ok(Decision {
            action,
            verdict: Verdict::Init,
            q_dagger: Some(ledger.q_dagger()),
        });
    };

    absorb_transition(&mut agent.pending, &mut agent.buffer, prev);
    let w = unconstrained_update(&ledger, &agent.buffer, &agent.cfg)?;
    let action = explore_or_greedy(&w, state, &agent.plant, explore);

    let accept = match agent.variant {
        SarsaVariant::Plain => true,
        SarsaVariant::M => constraints_hold(&w, &ledger, state, &action, &agent.cfg),
    };
    if accept {
        let next = Ledger::new(w, *state, action);
        agent.ledger = Some(next);
        return Ok(Decision {
            action,
            verdict: Verdict::Accept,
            q_dagger: Some(next.q_dagger()),
        });
    }
    let action = explore_or_greedy(ledger.weights(), state, &agent.plant, explore);
    Ok(Decision {
        action,
        verdict: Verdict::Reject,
        q_dagger: Some(ledger.q_dagger()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{stage_cost, HotspotParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rollout(agent: &mut SarsaAgent, steps: usize, seed: u64) -> Vec<Decision> {
        let plant = agent.plant;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = State::new(-1.0, -1.0, PI / 2.0);
        let mut prev = None;
        let mut out = Vec::new();
        for _ in 0..steps {
            let d = sarsa_step(agent, &s, prev.as_ref(), &mut rng).unwrap();
            let (next, applied) = plant.step(&s, &d.action).unwrap();
            prev = Some(Transition {
                state: s,
                action: applied,
                cost: stage_cost(&s, &applied, &HotspotParams::default()),
                next_state: next,
            });
            out.push(d);
            s = next;
        }
        out
    }

    #[test]
    fn plain_always_accepts() {
        let mut agent = SarsaAgent::new(
            SarsaVariant::Plain,
            CalfConfig::default(),
            Plant::default(),
            0.15,
        );
        let trace = rollout(&mut agent, 40, 3);
        assert_eq!(trace[0].verdict, Verdict::Init);
        assert!(trace[1..].iter().all(|d| d.verdict == Verdict::Accept));
    }

    #[test]
    fn m_variant_ledger_is_monotone() {
        let mut agent = SarsaAgent::new(
            SarsaVariant::M,
            CalfConfig::default(),
            Plant::default(),
            0.15,
        );
        let trace = rollout(&mut agent, 80, 5);
        let mut last = f64::INFINITY;
        for d in &trace {
            let q = d.q_dagger.unwrap();
            assert!(q <= last);
            if d.verdict == Verdict::Reject {
                assert_eq!(q, last);
            }
            last = q;
        }
    }

    #[test]
    fn m_rejects_when_decay_is_impossible() {
        let cfg = CalfConfig {
            nu_bar: 1e9,
            ..Default::default()
        };
        let mut agent = SarsaAgent::new(SarsaVariant::M, cfg, Plant::default(), 0.0);
        let trace = rollout(&mut agent, 10, 0);
        let q0 = trace[0].q_dagger;
        assert!(trace[1..]
            .iter()
            .all(|d| d.verdict == Verdict::Reject && d.q_dagger == q0));
    }
}
