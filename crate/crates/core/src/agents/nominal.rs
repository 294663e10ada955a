use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dynamics::{wrap, Action, Plant, State};
use crate::error::{CalfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilizerGains {
    pub k_rho: f64,
    pub k_alpha: f64,
    pub k_beta: f64,
}

impl Default for StabilizerGains {
    fn default() -> Self {
        Self {
            k_rho: 0.5,
            k_alpha: 1.2,
            k_beta: -2.0,
        }
    }
}

impl StabilizerGains {
    pub fn validate(&self) -> Result<()> {
        if self.k_rho > 0.0 && self.k_beta < 0.0 && self.k_alpha - self.k_rho > 0.0 {
            Ok(())
        } else {
            Err(CalfError::Config(format!(
                "stabilizer gains need k_rho > 0, k_beta < 0, k_alpha > k_rho: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarState {
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// `ρ = √(x²+y²)`, `α = −ϑ + atan2(y, x)`, `β = −ϑ − α`, angles wrapped.
/// `atan2(0, 0)` is taken as 0.
pub fn polar_transform(state: &State) -> PolarState {
    let rho = state.x.hypot(state.y);
    let bearing = if rho == 0.0 {
        0.0
    } else {
        state.y.atan2(state.x)
    };
    let alpha = wrap(-state.theta + bearing);
    let beta = wrap(-state.theta - alpha);
    PolarState { rho, alpha, beta }
}

/// Polar-coordinate parking law `v = K_ρ ρ`, `ω = K_α α + K_β β`.
///
/// `α` and `β` from [`polar_transform`] are measured from the outward radial,
/// so the gain law is applied to their goal-facing counterparts (shifted by
/// π). When the goal lies behind the robot (`α ∉ (−π/2, π/2]`) the robot
/// reverses, using `α − π` in the gain law. The result is saturated.
pub fn nominal_policy(state: &State, gains: &StabilizerGains, plant: &Plant) -> Action {
    let p = polar_transform(state);
    let alpha = wrap(p.alpha + PI);
    let beta = wrap(p.beta + PI);
    let (v, alpha) = if alpha > -FRAC_PI_2 && alpha <= FRAC_PI_2 {
        (gains.k_rho * p.rho, alpha)
    } else {
        (-gains.k_rho * p.rho, wrap(alpha - PI))
    };
    let omega = gains.k_alpha * alpha + gains.k_beta * beta;
    plant.saturate(state, &Action::new(v, omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{in_goal, GoalSpec};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn polar_examples() {
        let p = polar_transform(&State::new(1.0, 0.0, 0.0));
        assert!(close(p.rho, 1.0) && close(p.alpha, 0.0) && close(p.beta, 0.0));

        let p = polar_transform(&State::new(0.0, 0.0, 1.0));
        assert!(close(p.rho, 0.0) && close(p.alpha, -1.0) && close(p.beta, 0.0));

        // α = −π/2 − 3π/4 = −5π/4 ≡ 3π/4; β = −π/2 − 3π/4 = −5π/4 ≡ 3π/4
        let p = polar_transform(&State::new(-1.0, -1.0, PI / 2.0));
        assert!(close(p.rho, 2f64.sqrt()));
        assert!(close(p.alpha, 3.0 * PI / 4.0));
        assert!(close(p.beta, 3.0 * PI / 4.0));
    }

    #[test]
    fn heading_away_reverses_toward_goal() {
        let plant = Plant::default();
        let g = StabilizerGains::default();
        // at (1, 0) facing +x the goal is straight behind: back up; only α is
        // reflected, so β = π still drives the turn
        let a = nominal_policy(&State::new(1.0, 0.0, 0.0), &g, &plant);
        assert!(close(a.v, -g.k_rho.min(0.22)));
        assert!(close(a.omega, (g.k_beta * PI).max(-2.84)));
        // facing the goal: drive forward, turning only to fix the final heading
        let a = nominal_policy(&State::new(1.0, 0.0, PI), &g, &plant);
        assert!(close(a.v, 0.22) && close(a.omega, (g.k_beta * PI).max(-2.84)));
    }

    #[test]
    fn near_goal_speed_is_small() {
        let plant = Plant::default();
        let g = StabilizerGains::default();
        for s in [
            State::new(0.1, 0.1, 0.3),
            State::new(-0.2, 0.0, -2.0),
            State::default(),
        ] {
            let a = nominal_policy(&s, &g, &plant);
            assert!(a.v.abs() <= g.k_rho * 0.2 + 1e-15);
        }
        assert_eq!(nominal_policy(&State::default(), &g, &plant).v, 0.0);
    }

    #[test]
    fn closed_loop_reaches_goal_from_default_start() {
        let plant = Plant::default();
        let g = StabilizerGains::default();
        let goal = GoalSpec::default();
        let mut s = State::new(-1.0, -1.0, PI / 2.0);
        let mut steps = 0;
        while !in_goal(&s, &goal) && steps < 300 {
            let a = nominal_policy(&s, &g, &plant);
            s = plant.step(&s, &a).unwrap().0;
            steps += 1;
        }
        assert!(in_goal(&s, &goal), "not reached after {steps} steps: {s:?}");
    }

    #[test]
    fn reaches_goal_from_anywhere_in_the_box() {
        let plant = Plant::default();
        let g = StabilizerGains::default();
        let goal = GoalSpec::default();
        for i in 0..9 {
            for j in 0..9 {
                for k in 0..8 {
                    let th = -PI + 2.0 * PI * (k as f64 + 0.5) / 8.0;
                    let mut s = State::new(-2.0 + 0.5 * i as f64, -2.0 + 0.5 * j as f64, th);
                    let start = s;
                    let mut steps = 0;
                    while !in_goal(&s, &goal) && steps < 3000 {
                        s = plant.step(&s, &nominal_policy(&s, &g, &plant)).unwrap().0;
                        steps += 1;
                    }
                    assert!(in_goal(&s, &goal), "from {start:?}");
                }
            }
        }
    }

    #[test]
    fn default_gains_valid() {
        assert!(StabilizerGains::default().validate().is_ok());
        let bad = StabilizerGains {
            k_beta: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
