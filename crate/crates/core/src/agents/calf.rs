use rand::Rng;

use super::{
    absorb_transition, episode_weights, greedy_action, nominal_policy, random_action, Decision,
    StabilizerGains, Verdict,
};
use crate::critic::{try_critic_update, CalfConfig, Ledger, ReplayBuffer};
use crate::dynamics::{Plant, State};
use crate::error::Result;
use crate::objective::Transition;

/// Per-agent state of the critic-as-Lyapunov-function controller.
///
/// Critic weights survive across episodes; the ledger, replay buffer and step
/// log restart at each episode.
#[derive(Debug, Clone)]
pub struct CalfAgent {
    pub cfg: CalfConfig,
    pub gains: StabilizerGains,
    pub plant: Plant,
    pub epsilon: f64,
    ledger: Option<Ledger>,
    buffer: ReplayBuffer,
    pending: Option<Transition>,
    carried: Option<crate::critic::CriticWeights>,
    step_counter: usize,
    log: Vec<Verdict>,
}

impl CalfAgent {
    pub fn new(cfg: CalfConfig, gains: StabilizerGains, plant: Plant, epsilon: f64) -> Self {
        Self {
            buffer: ReplayBuffer::new(cfg.buffer_len),
            cfg,
            gains,
            plant,
            epsilon,
            ledger: None,
            pending: None,
            carried: None,
            step_counter: 0,
            log: Vec::new(),
        }
    }

    pub fn begin_episode(&mut self) {
        if let Some(l) = self.ledger.take() {
            self.carried = Some(*l.weights());
        }
        self.buffer.clear();
        self.pending = None;
        self.step_counter = 0;
        self.log.clear();
    }

    pub fn ledger(&self) -> Option<&Ledger> {
        self.ledger.as_ref()
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn log(&self) -> &[Verdict] {
        &self.log
    }

    pub fn steps(&self) -> usize {
        self.step_counter
    }

    fn record(&mut self, action: crate::dynamics::Action, verdict: Verdict) -> Decision {
        self.step_counter += 1;
        self.log.push(verdict);
        Decision {
            action,
            verdict,
            q_dagger: self.ledger.map(|l| l.q_dagger()),
        }
    }
}

/// One control step.
///
/// The first call of an episode initializes the ledger at `(s₀, π₀(s₀))` and
/// returns `π₀(s₀)`. Afterwards: the greedy action `a*` of `Q̂^{w†}(s, ·)`
/// (uniformly random with probability ε) is proposed; outside the goal gate
/// the constrained critic update is attempted at `(s, a*)`. On success the
/// ledger moves to `(w*, s, a*)` and `a*` is returned, otherwise `π₀(s)`.
pub fn calf_step<R: Rng + ?Sized>(
    agent: &mut CalfAgent,
    state: &State,
    prev: Option<&Transition>,
    rng: &mut R,
) -> Result<Decision> {
    let fallback = nominal_policy(state, &agent.gains, &agent.plant);
    let Some(ledger) = agent.ledger else {
        let w0 = episode_weights(agent.carried, state, &fallback, &agent.cfg)?;
        agent.ledger = Some(Ledger::new(w0, *state, fallback));
        return Ok(agent.record(fallback, Verdict::Init));
    };

    absorb_transition(&mut agent.pending, &mut agent.buffer, prev);

    let mut candidate = greedy_action(ledger.weights(), state, &agent.plant);
    if agent.epsilon > 0.0 && rng.random::<f64>() < agent.epsilon {
        candidate = random_action(state, &agent.plant, rng);
    }
    let candidate = agent.plant.saturate(state, &candidate);

    if agent.cfg.gated(state) {
        return Ok(agent.record(fallback, Verdict::Gate));
    }
    match try_critic_update(&ledger, &agent.buffer, state, &candidate, &agent.cfg)? {
        Some(w) => {
            agent.ledger = Some(Ledger::new(w, *state, candidate));
            Ok(agent.record(candidate, Verdict::Critic))
        }
        None => Ok(agent.record(fallback, Verdict::Fallback)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Action;
    use crate::objective::{stage_cost, HotspotParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rollout(agent: &mut CalfAgent, steps: usize) -> Vec<(State, Decision)> {
        let plant = agent.plant;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = State::new(-1.0, -1.0, PI / 2.0);
        let mut prev = None;
        let mut out = Vec::new();
        for _ in 0..steps {
            let d = calf_step(agent, &s, prev.as_ref(), &mut rng).unwrap();
            let (next, applied) = plant.step(&s, &d.action).unwrap();
            prev = Some(Transition {
                state: s,
                action: applied,
                cost: stage_cost(&s, &applied, &HotspotParams::default()),
                next_state: next,
            });
            out.push((s, d));
            s = next;
        }
        out
    }

    #[test]
    fn infeasible_config_replays_stabilizer() {
        let cfg = CalfConfig {
            c_low: 1.0,
            c_up: 1.0 + 1e-9,
            nu_bar: 1e9,
            ..Default::default()
        };
        let gains = StabilizerGains::default();
        let plant = Plant::default();
        let mut agent = CalfAgent::new(cfg, gains, plant, 0.0);
        for (s, d) in rollout(&mut agent, 60) {
            assert_eq!(d.action, nominal_policy(&s, &gains, &plant));
            assert!(!d.verdict.is_success());
        }
    }

    #[test]
    fn first_success_decays_ledger() {
        let mut agent = CalfAgent::new(
            CalfConfig::default(),
            StabilizerGains::default(),
            Plant::default(),
            0.0,
        );
        let trace = rollout(&mut agent, 40);
        let q0 = trace[0].1.q_dagger.unwrap();
        let first = trace
            .iter()
            .find(|(_, d)| d.verdict == Verdict::Critic)
            .expect("a success");
        assert!(first.1.q_dagger.unwrap() <= q0 - 0.01 + 1e-8);
        let mut last = q0;
        for (_, d) in &trace {
            let q = d.q_dagger.unwrap();
            assert!(q <= last);
            last = q;
        }
    }

    #[test]
    fn gate_returns_stabilizer_action() {
        let gains = StabilizerGains::default();
        let plant = Plant::default();
        let mut agent = CalfAgent::new(CalfConfig::default(), gains, plant, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        calf_step(
            &mut agent,
            &State::new(-1.0, -1.0, PI / 2.0),
            None,
            &mut rng,
        )
        .unwrap();
        let inside = State::new(0.1, -0.1, 0.4);
        let d = calf_step(&mut agent, &inside, None, &mut rng).unwrap();
        assert_eq!(d.verdict, Verdict::Gate);
        assert_eq!(d.action, nominal_policy(&inside, &gains, &plant));
    }

    #[test]
    fn deterministic_without_exploration() {
        let mk = || {
            CalfAgent::new(
                CalfConfig::default(),
                StabilizerGains::default(),
                Plant::default(),
                0.0,
            )
        };
        let a: Vec<Action> = rollout(&mut mk(), 50)
            .into_iter()
            .map(|(_, d)| d.action)
            .collect();
        let b: Vec<Action> = rollout(&mut mk(), 50)
            .into_iter()
            .map(|(_, d)| d.action)
            .collect();
        assert_eq!(a, b);
    }
}
