use rand::Rng;

use crate::dynamics::{Action, Plant, State};
use crate::objective::{stage_cost, HotspotParams};
use crate::solvers::{cem_plan, ActionBox, CemConfig, CemPlan};

/// Plans `horizon` steps ahead with CEM on the saturated Euler model and the
/// stage cost (no terminal term).
pub fn mpc_policy(
    state: &State,
    horizon: usize,
    cem: &CemConfig,
    plant: &Plant,
    hotspot: &HotspotParams,
    init_mean: Option<&[Action]>,
) -> CemPlan {
    let d = &plant.dynamics;
    let bx = ActionBox::new((-d.v_max, d.v_max), (-d.omega_max, d.omega_max));
    cem_plan(
        |s, a| plant.step(s, a).map(|(n, _)| n).unwrap_or(*s),
        |s| stage_cost(s, &Action::ZERO, hotspot),
        state,
        horizon,
        cem,
        &bx,
        init_mean,
    )
}

/// Receding-horizon controller replanning at every step.
#[derive(Debug, Clone)]
pub struct MpcAgent {
    pub horizon: usize,
    pub cem: CemConfig,
    pub plant: Plant,
    pub hotspot: HotspotParams,
    prev_plan: Option<Vec<Action>>,
}

impl MpcAgent {
    pub fn new(horizon: usize, cem: CemConfig, plant: Plant, hotspot: HotspotParams) -> Self {
        Self {
            horizon,
            cem,
            plant,
            hotspot,
            prev_plan: None,
        }
    }

    pub fn begin_episode(&mut self) {
        self.prev_plan = None;
    }

    pub fn act<R: Rng + ?Sized>(&mut self, state: &State, rng: &mut R) -> Action {
        let cem = CemConfig {
            seed: rng.random(),
            ..self.cem
        };
        let warm: Option<Vec<Action>> = match (&self.prev_plan, cem.warm_start) {
            (Some(p), true) => {
                let mut shifted = p[1..].to_vec();
                shifted.push(*p.last().expect("plans are non-empty"));
                Some(shifted)
            }
            _ => None,
        };
        let plan = mpc_policy(
            state,
            self.horizon,
            &cem,
            &self.plant,
            &self.hotspot,
            warm.as_deref(),
        );
        let first = plan.actions[0];
        self.prev_plan = Some(plan.actions);
        self.plant.saturate(state, &first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plan_has_horizon_length_and_first_action_in_box() {
        let cem = CemConfig {
            population: 40,
            elites: 5,
            iterations: 5,
            ..Default::default()
        };
        let plant = Plant::default();
        let plan = mpc_policy(
            &State::new(-1.0, -1.0, 1.0),
            4,
            &cem,
            &plant,
            &HotspotParams::default(),
            None,
        );
        assert_eq!(plan.actions.len(), 4);
        assert!(plan.actions[0].v.abs() <= 0.22 && plan.actions[0].omega.abs() <= 2.84);
    }

    #[test]
    fn heads_toward_goal() {
        let cem = CemConfig {
            population: 60,
            elites: 6,
            iterations: 10,
            ..Default::default()
        };
        let mut agent = MpcAgent::new(5, cem, Plant::default(), HotspotParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = State::new(-1.0, -1.0, 0.8);
        for _ in 0..60 {
            let a = agent.act(&s, &mut rng);
            s = agent.plant.step(&s, &a).unwrap().0;
        }
        assert!(s.planar_norm() < 2.0f64.sqrt() - 0.3, "{s:?}");
    }
}
