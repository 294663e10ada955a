use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ActionBox;
use crate::dynamics::{Action, State};
use crate::error::{CalfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CemConfig {
    pub population: usize,
    pub elites: usize,
    pub iterations: usize,
    /// Initial sampling standard deviation for `(v, ω)`.
    pub init_std: [f64; 2],
    pub seed: u64,
    /// Seed the sampling mean with the previous plan shifted by one step.
    pub warm_start: bool,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self {
            population: 200,
            elites: 20,
            iterations: 30,
            init_std: [0.2, 2.0],
            seed: 0,
            warm_start: true,
        }
    }
}

impl CemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.elites == 0 || self.elites >= self.population || self.iterations == 0 {
            return Err(CalfError::Config(format!("invalid CEM config {self:?}")));
        }
        if self.init_std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(CalfError::Config("CEM init_std must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CemPlan {
    pub actions: Vec<Action>,
    /// Score of `actions`.
    pub cost: f64,
    /// Best-ever score after each iteration.
    pub history: Vec<f64>,
}

/// Cross-entropy search over open-loop action sequences.
///
/// The score of a sequence is the sum of `cost_fn` over the `horizon` states it
/// visits after the start (`step_fn` applied in turn). Samples are drawn from a
/// diagonal Gaussian clipped to `bx`; the current mean is always one of the
/// samples. Deterministic for a fixed `cfg.seed`.
pub fn cem_plan<S, C>(
    step_fn: S,
    cost_fn: C,
    state: &State,
    horizon: usize,
    cfg: &CemConfig,
    bx: &ActionBox,
    init_mean: Option<&[Action]>,
) -> CemPlan
where
    S: Fn(&State, &Action) -> State,
    C: Fn(&State) -> f64,
{
    assert!(horizon >= 1, "CEM horizon must be at least one step");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let center = bx.lerp(0.5, 0.5);
    let mut mean: Vec<[f64; 2]> = (0..horizon)
        .map(|k| {
            let a = init_mean.and_then(|m| m.get(k)).copied().unwrap_or(center);
            let a = bx.clamp(&a);
            [a.v, a.omega]
        })
        .collect();
    let mut std: Vec<[f64; 2]> = vec![cfg.init_std; horizon];

    let rollout = |seq: &[[f64; 2]]| -> f64 {
        let mut s = *state;
        let mut total = 0.0;
        for a in seq {
            s = step_fn(&s, &Action::new(a[0], a[1]));
            total += cost_fn(&s);
        }
        total
    };

    let mut best_seq = mean.clone();
    let mut best_cost = rollout(&mean);
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut samples: Vec<Vec<[f64; 2]>> = vec![vec![[0.0; 2]; horizon]; cfg.population];
    let mut scores: Vec<(f64, usize)> = Vec::with_capacity(cfg.population);

    for _ in 0..cfg.iterations {
        scores.clear();
        for (idx, sample) in samples.iter_mut().enumerate() {
            for k in 0..horizon {
                if idx == 0 {
                    sample[k] = mean[k];
                    continue;
                }
                let zv: f64 = StandardNormal.sample(&mut rng);
                let zw: f64 = StandardNormal.sample(&mut rng);
                sample[k] = [
                    (mean[k][0] + std[k][0] * zv).clamp(bx.v.0, bx.v.1),
                    (mean[k][1] + std[k][1] * zw).clamp(bx.omega.0, bx.omega.1),
                ];
            }
            let score = rollout(sample);
            scores.push((if score.is_nan() { f64::INFINITY } else { score }, idx));
        }
        scores.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        if scores[0].0 < best_cost {
            best_cost = scores[0].0;
            best_seq.clone_from(&samples[scores[0].1]);
        }
        history.push(best_cost);

        let k_el = cfg.elites as f64;
        for k in 0..horizon {
            for d in 0..2 {
                let m = scores[..cfg.elites]
                    .iter()
                    .map(|&(_, i)| samples[i][k][d])
                    .sum::<f64>()
                    / k_el;
                let var = scores[..cfg.elites]
                    .iter()
                    .map(|&(_, i)| (samples[i][k][d] - m).powi(2))
                    .sum::<f64>()
                    / k_el;
                mean[k][d] = m;
                std[k][d] = var.sqrt().max(1e-6);
            }
        }
    }

    CemPlan {
        actions: best_seq.iter().map(|a| Action::new(a[0], a[1])).collect(),
        cost: best_cost,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tb() -> ActionBox {
        ActionBox::new((-0.22, 0.22), (-2.84, 2.84))
    }

    fn integrator(s: &State, a: &Action) -> State {
        State::new(s.x + 0.1 * a.v, s.y + 0.1 * a.omega, s.theta)
    }

    #[test]
    fn zero_cost_gives_zero() {
        let plan = cem_plan(
            integrator,
            |_| 0.0,
            &State::default(),
            3,
            &CemConfig::default(),
            &tb(),
            None,
        );
        assert_eq!(plan.cost, 0.0);
        assert_eq!(plan.actions.len(), 3);
        assert!(plan.actions.iter().all(|a| tb().contains(a)));
    }

    #[test]
    fn history_is_monotone_and_seeded() {
        let cost = |s: &State| (s.x - 0.05).powi(2) + (s.y + 0.3).powi(2);
        let cfg = CemConfig {
            seed: 7,
            ..Default::default()
        };
        let a = cem_plan(integrator, cost, &State::default(), 4, &cfg, &tb(), None);
        let b = cem_plan(integrator, cost, &State::default(), 4, &cfg, &tb(), None);
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(a.history.len(), cfg.iterations);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = CemConfig {
            elites: 200,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(CemConfig::default().validate().is_ok());
    }
}
