//! Shared fixtures for the criterion benchmarks under `benches/`.

use calf_core::agents::nominal_policy;
use calf_core::critic::{init_weights, td1_problem, update_constraints, ReplayBuffer};
use calf_core::objective::{stage_cost, Transition};
use calf_core::{Action, CalfConfig, ExperimentConfig, Ledger, QpProblem, State};

/// A critic-update problem as CALF meets it mid-episode: the ledger set at
/// the start pose, a full replay buffer of stabilizer transitions and the
/// constraint rows at the current state.
pub struct UpdateFixture {
    pub cfg: CalfConfig,
    pub ledger: Ledger,
    pub buffer: ReplayBuffer,
    pub state: State,
    pub action: Action,
}

impl UpdateFixture {
    pub fn new() -> Self {
        let exp = ExperimentConfig::default();
        let plant = exp.plant();
        let cfg = exp.calf;
        let s0 = exp.start;
        let a0 = nominal_policy(&s0, &exp.gains, &plant);
        let ledger = Ledger::new(
            init_weights(&s0, &a0, &cfg).expect("start pose admits a sandwich"),
            s0,
            a0,
        );

        let mut buffer = ReplayBuffer::new(cfg.buffer_len);
        let mut state = s0;
        let mut prev: Option<Transition> = None;
        for _ in 0..=cfg.buffer_len {
            let action = nominal_policy(&state, &exp.gains, &plant);
            if let Some(tr) = prev {
                buffer.push(tr, action);
            }
            let (next, applied) = plant.step(&state, &action).expect("finite step");
            prev = Some(Transition {
                state,
                action: applied,
                cost: stage_cost(&state, &applied, &exp.hotspot),
                next_state: next,
            });
            state = next;
        }
        let action = nominal_policy(&state, &exp.gains, &plant);
        Self {
            cfg,
            ledger,
            buffer,
            state,
            action,
        }
    }

    pub fn qp(&self) -> QpProblem {
        let (mut p, _) = td1_problem(&self.ledger, &self.buffer, &self.cfg);
        p.inequalities = update_constraints(&self.ledger, &self.state, &self.action, &self.cfg);
        p
    }
}

impl Default for UpdateFixture {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_buffer_is_full() {
        let f = UpdateFixture::new();
        assert_eq!(f.buffer.len(), f.cfg.buffer_len);
        assert_eq!(f.qp().inequalities.len(), 3);
    }
}
