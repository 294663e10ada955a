//! Discrete-time differential-drive robot.
//!
//! Kinematics `ẋ = v cos ϑ, ẏ = v sin ϑ, ϑ̇ = ω` integrated with explicit
//! Euler at the controller sampling time. Actuation limits follow the
//! TurtleBot3 envelope; inside the high-cost zone the linear speed is further
//! clamped to 1 cm/s.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{CalfError, Result};
use crate::objective::HotspotParams;

/// Robot pose.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl State {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    /// Euclidean norm of `(x, y, ϑ)`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.theta * self.theta
    }

    pub fn planar_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub v: f64,
    pub omega: f64,
}

impl Action {
    pub const ZERO: Action = Action { v: 0.0, omega: 0.0 };

    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.v.is_finite() && self.omega.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Sampling time in seconds.
    pub dt: f64,
    pub v_max: f64,
    pub omega_max: f64,
    /// Linear speed limit inside the high-cost zone.
    pub zone_v_max: f64,
    /// Zone boundary, in standard deviations of the hot-spot Gaussian.
    pub zone_sigma_mult: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            v_max: 0.22,
            omega_max: 2.84,
            zone_v_max: 0.01,
            zone_sigma_mult: 2.0,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.v_max > 0.0
            && self.omega_max > 0.0
            && self.zone_v_max > 0.0
            && self.zone_v_max < self.v_max
            && self.zone_sigma_mult > 0.0
            && [
                self.dt,
                self.v_max,
                self.omega_max,
                self.zone_v_max,
                self.zone_sigma_mult,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(CalfError::Config(format!(
                "invalid dynamics config {self:?}"
            )))
        }
    }
}

/// Maps an angle into `(−π, π]`.
///
/// Inputs that land within rounding distance of the branch cut resolve to `+π`,
/// so `3π` maps to `π` rather than `−π + ε`.
pub fn wrap_angle(angle: f64) -> Result<f64> {
    if !angle.is_finite() {
        return Err(CalfError::Domain(format!(
            "cannot wrap non-finite angle {angle}"
        )));
    }
    Ok(wrap(angle))
}

pub(crate) fn wrap(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let r = angle.rem_euclid(TAU);
    let cut = 4.0 * f64::EPSILON * angle.abs();
    if (r - PI).abs() <= cut {
        PI
    } else if r > PI {
        r - TAU
    } else {
        r
    }
}

/// True when `(x, y)` lies inside the high-cost zone ellipse.
pub fn in_zone(x: f64, y: f64, cfg: &DynamicsConfig, zone: &HotspotParams) -> bool {
    let dx = (x - zone.mu_x) / zone.sigma_x;
    let dy = (y - zone.mu_y) / zone.sigma_y;
    dx * dx + dy * dy <= cfg.zone_sigma_mult * cfg.zone_sigma_mult
}

/// Linear speed bound available at `state`.
pub fn speed_limit(state: &State, cfg: &DynamicsConfig, zone: &HotspotParams) -> f64 {
    if in_zone(state.x, state.y, cfg, zone) {
        cfg.zone_v_max
    } else {
        cfg.v_max
    }
}

pub fn saturate_action(
    state: &State,
    action: &Action,
    cfg: &DynamicsConfig,
    zone: &HotspotParams,
) -> Action {
    let v_lim = speed_limit(state, cfg, zone);
    Action {
        v: action.v.clamp(-v_lim, v_lim),
        omega: action.omega.clamp(-cfg.omega_max, cfg.omega_max),
    }
}

/// One explicit-Euler step. The action must already be saturated.
pub fn euler_step(state: &State, action: &Action, cfg: &DynamicsConfig) -> Result<State> {
    if !state.is_finite() || !action.is_finite() {
        return Err(CalfError::Domain(format!(
            "non-finite Euler step input: {state:?}, {action:?}"
        )));
    }
    let (sin, cos) = state.theta.sin_cos();
    Ok(State {
        x: state.x + cfg.dt * action.v * cos,
        y: state.y + cfg.dt * action.v * sin,
        theta: wrap(state.theta + cfg.dt * action.omega),
    })
}

/// The environment seen by every agent: saturation followed by Euler.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Plant {
    pub dynamics: DynamicsConfig,
    pub zone: HotspotParams,
}

impl Plant {
    pub fn new(dynamics: DynamicsConfig, zone: HotspotParams) -> Self {
        Self { dynamics, zone }
    }

    pub fn saturate(&self, state: &State, action: &Action) -> Action {
        saturate_action(state, action, &self.dynamics, &self.zone)
    }

    /// Saturates `action` and integrates; returns the next state and the
    /// action actually applied.
    pub fn step(&self, state: &State, action: &Action) -> Result<(State, Action)> {
        let applied = self.saturate(state, action);
        Ok((euler_step(state, &applied, &self.dynamics)?, applied))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert!(close(wrap_angle(3.0 * PI).unwrap(), PI));
        assert!(close(wrap_angle(-5.0 * PI / 4.0).unwrap(), 3.0 * PI / 4.0));
        assert!(close(wrap_angle(-PI).unwrap(), PI));
        assert!(close(wrap_angle(PI).unwrap(), PI));
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn saturation_examples() {
        let cfg = DynamicsConfig::default();
        let zone = HotspotParams::default();
        let far = State::new(1.0, 1.0, 0.0);
        assert_eq!(
            saturate_action(&far, &Action::new(0.5, 5.0), &cfg, &zone),
            Action::new(0.22, 2.84)
        );
        assert_eq!(
            saturate_action(&far, &Action::ZERO, &cfg, &zone),
            Action::ZERO
        );
        let center = State::new(-0.6, -0.5, 0.0);
        assert_eq!(
            saturate_action(&center, &Action::new(0.22, 0.0), &cfg, &zone),
            Action::new(0.01, 0.0)
        );
        assert_eq!(
            saturate_action(&center, &Action::new(-0.3, -9.0), &cfg, &zone),
            Action::new(-0.01, -2.84)
        );
    }

    #[test]
    fn zone_boundary_is_two_sigma() {
        let cfg = DynamicsConfig::default();
        let zone = HotspotParams::default();
        assert!(in_zone(-0.6 + 0.2, -0.5, &cfg, &zone));
        assert!(!in_zone(-0.6 + 0.2001, -0.5, &cfg, &zone));
    }

    #[test]
    fn euler_examples() {
        let cfg = DynamicsConfig::default();
        let s = euler_step(&State::default(), &Action::new(0.22, 0.0), &cfg).unwrap();
        assert!(close(s.x, 0.022) && close(s.y, 0.0) && close(s.theta, 0.0));
        let s = euler_step(&State::default(), &Action::ZERO, &cfg).unwrap();
        assert_eq!(s, State::default());
        let s = euler_step(
            &State::new(0.0, 0.0, PI / 2.0),
            &Action::new(0.1, 0.0),
            &cfg,
        )
        .unwrap();
        assert!(close(s.x, 0.0) && close(s.y, 0.01) && close(s.theta, PI / 2.0));
        assert!(euler_step(&State::new(f64::NAN, 0.0, 0.0), &Action::ZERO, &cfg).is_err());
    }

    fn any_state() -> impl Strategy<Value = State> {
        (-5.0..5.0f64, -5.0..5.0f64, (-PI + 1e-12)..PI).prop_map(|(x, y, t)| State::new(x, y, t))
    }

    proptest! {
        #[test]
        fn wrap_is_congruent_and_in_range(a in -1e4..1e4f64) {
            let w = wrap_angle(a).unwrap();
            prop_assert!(w > -PI && w <= PI);
            let k = ((a - w) / TAU).round();
            prop_assert!((a - w - k * TAU).abs() < 1e-9);
        }

        #[test]
        fn step_invariants(s in any_state(), v in -1.0..1.0f64, w in -10.0..10.0f64) {
            let cfg = DynamicsConfig::default();
            let zone = HotspotParams::default();
            let a = saturate_action(&s, &Action::new(v, w), &cfg, &zone);
            prop_assert_eq!(saturate_action(&s, &a, &cfg, &zone), a);
            let n = euler_step(&s, &a, &cfg).unwrap();
            prop_assert!(n.is_finite());
            prop_assert!(n.theta > -PI && n.theta <= PI);
            let moved = (n.x - s.x).hypot(n.y - s.y);
            prop_assert!(moved <= cfg.dt * cfg.v_max + 1e-15);
            prop_assert_eq!(euler_step(&s, &Action::ZERO, &cfg).unwrap(), s);
        }
    }
}
