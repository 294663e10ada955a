//! Stage cost, goal set and episode cost accounting.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Action, State};
use crate::error::{CalfError, Result};

/// Gaussian "hot spot" on the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotspotParams {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub weight: f64,
}

impl Default for HotspotParams {
    fn default() -> Self {
        Self {
            mu_x: -0.6,
            mu_y: -0.5,
            sigma_x: 0.1,
            sigma_y: 0.1,
            weight: 10.0,
        }
    }
}

impl HotspotParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_x > 0.0 && self.sigma_y > 0.0 && self.weight >= 0.0 {
            Ok(())
        } else {
            Err(CalfError::Config(format!("invalid hot spot {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalSpec {
    pub target: State,
    /// Planar radius of the goal disc.
    pub radius: f64,
    /// Added once to the accumulated cost of an episode that misses the goal.
    pub miss_penalty: f64,
}

impl Default for GoalSpec {
    fn default() -> Self {
        Self {
            target: State::default(),
            radius: 0.2,
            miss_penalty: 2000.0,
        }
    }
}

impl GoalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radius > 0.0 && self.miss_penalty >= 0.0 && self.target.is_finite() {
            Ok(())
        } else {
            Err(CalfError::Config(format!("invalid goal {self:?}")))
        }
    }
}

/// One environment step as seen by a learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: State,
    pub action: Action,
    pub cost: f64,
    pub next_state: State,
}

pub fn hotspot_density(x: f64, y: f64, p: &HotspotParams) -> f64 {
    let dx = (x - p.mu_x) / p.sigma_x;
    let dy = (y - p.mu_y) / p.sigma_y;
    (-0.5 * (dx * dx + dy * dy)).exp() / (2.0 * PI * p.sigma_x * p.sigma_y)
}

/// Analytic gradient of [`hotspot_density`] with respect to `(x, y)`.
pub fn hotspot_gradient(x: f64, y: f64, p: &HotspotParams) -> (f64, f64) {
    let d = hotspot_density(x, y, p);
    (
        -d * (x - p.mu_x) / (p.sigma_x * p.sigma_x),
        -d * (y - p.mu_y) / (p.sigma_y * p.sigma_y),
    )
}

/// `x² + y² + 0.1ϑ² + w·density(x, y)`. The action is not penalized.
pub fn stage_cost(state: &State, _action: &Action, p: &HotspotParams) -> f64 {
    state.x * state.x
        + state.y * state.y
        + 0.1 * state.theta * state.theta
        + p.weight * hotspot_density(state.x, state.y, p)
}

fn planar_distance(state: &State, g: &GoalSpec) -> f64 {
    (state.x - g.target.x).hypot(state.y - g.target.y)
}

pub fn in_goal(state: &State, g: &GoalSpec) -> bool {
    planar_distance(state, g) <= g.radius
}

pub fn goal_distance(state: &State, g: &GoalSpec) -> f64 {
    (planar_distance(state, g) - g.radius).max(0.0)
}

/// Sum of stage costs, plus the miss penalty when the goal was not reached.
pub fn accumulate(trajectory: &[Transition], reached: bool, g: &GoalSpec) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(CalfError::Domain(
            "cannot accumulate an empty trajectory".into(),
        ));
    }
    let sum: f64 = trajectory.iter().map(|t| t.cost).sum();
    Ok(if reached { sum } else { sum + g.miss_penalty })
}
