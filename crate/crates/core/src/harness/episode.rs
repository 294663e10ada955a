use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::rng::episode_rng;
use crate::agents::{Agent, AgentKind, Verdict};
use crate::dynamics::{Action, State};
use crate::objective::{accumulate, in_goal, stage_cost, Transition};

/// One control step: the state before the step, the applied action and its cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub t: usize,
    pub state: State,
    pub action: Action,
    pub stage_cost: f64,
    /// Running sum of stage costs up to and including this step.
    pub cum_cost: f64,
    pub verdict: Verdict,
    pub q_dagger: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub agent: AgentKind,
    pub seed: u64,
    pub episode: usize,
    pub rows: Vec<StepRow>,
    pub final_state: State,
    pub reached: bool,
    /// Steps taken before the goal was entered or the cap hit.
    pub steps: usize,
    /// Stage costs plus the miss penalty.
    pub accumulated_cost: f64,
    pub penalty: f64,
    /// Solver diagnostic when the episode was cut short by an error.
    pub aborted: Option<String>,
}

impl EpisodeRecord {
    pub fn stage_cost_total(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_cost)
    }
}

/// Runs one episode from the configured start pose with `agent`, which keeps
/// whatever it learned for the next call.
pub fn run_episode(
    agent: &mut Agent,
    cfg: &ExperimentConfig,
    seed: u64,
    episode: usize,
) -> EpisodeRecord {
    let plant = cfg.plant();
    let mut rng = episode_rng(cfg.master_seed, seed, episode);
    agent.begin_episode();

    let mut state = cfg.start;
    let mut rows = Vec::with_capacity(cfg.episode_len);
    let mut transitions: Vec<Transition> = Vec::with_capacity(cfg.episode_len);
    let mut cum = 0.0;
    let mut aborted = None;

    for t in 0..cfg.episode_len {
        if in_goal(&state, &cfg.goal) {
            break;
        }
        let step = agent
            .act(&state, transitions.last(), &mut rng)
            .and_then(|d| {
                plant
                    .step(&state, &d.action)
                    .map(|(next, applied)| (d, next, applied))
            });
        let (decision, next, applied) = match step {
            Ok(v) => v,
            Err(e) => {
                aborted = Some(e.to_string());
                break;
            }
        };
        let cost = stage_cost(&state, &applied, &cfg.hotspot);
        cum += cost;
        rows.push(StepRow {
            t,
            state,
            action: applied,
            stage_cost: cost,
            cum_cost: cum,
            verdict: decision.verdict,
            q_dagger: decision.q_dagger,
        });
        transitions.push(Transition {
            state,
            action: applied,
            cost,
            next_state: next,
        });
        state = next;
    }

    let reached = aborted.is_none() && in_goal(&state, &cfg.goal);
    let penalty = if reached { 0.0 } else { cfg.goal.miss_penalty };
    let accumulated_cost = if transitions.is_empty() {
        penalty
    } else {
        accumulate(&transitions, reached, &cfg.goal).unwrap_or(cum + penalty)
    };
    EpisodeRecord {
        agent: cfg.agent,
        seed,
        episode,
        steps: rows.len(),
        rows,
        final_state: state,
        reached,
        accumulated_cost,
        penalty,
        aborted,
    }
}

/// All episodes of one seed with a single learning agent.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Vec<EpisodeRecord> {
    let mut agent = cfg.build_agent();
    (0..cfg.episodes)
        .map(|e| run_episode(&mut agent, cfg, seed, e))
        .collect()
}
