use serde::{Deserialize, Serialize};

use crate::dynamics::{speed_limit, Action, DynamicsConfig, State};
use crate::objective::HotspotParams;

/// Rectangular action set `[v_lo, v_hi] × [ω_lo, ω_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBox {
    pub v: (f64, f64),
    pub omega: (f64, f64),
}

impl ActionBox {
    pub fn new(v: (f64, f64), omega: (f64, f64)) -> Self {
        debug_assert!(v.0 <= v.1 && omega.0 <= omega.1, "empty action box");
        Self { v, omega }
    }

    /// Admissible actions at `state`, including the zone speed clamp.
    pub fn at_state(state: &State, cfg: &DynamicsConfig, zone: &HotspotParams) -> Self {
        let v = speed_limit(state, cfg, zone);
        Self::new((-v, v), (-cfg.omega_max, cfg.omega_max))
    }

    pub fn contains(&self, a: &Action) -> bool {
        a.v >= self.v.0 && a.v <= self.v.1 && a.omega >= self.omega.0 && a.omega <= self.omega.1
    }

    pub fn clamp(&self, a: &Action) -> Action {
        Action::new(
            a.v.clamp(self.v.0, self.v.1),
            a.omega.clamp(self.omega.0, self.omega.1),
        )
    }

    /// Affine map from the unit square.
    pub fn lerp(&self, u: f64, z: f64) -> Action {
        Action::new(
            self.v.0 + u * (self.v.1 - self.v.0),
            self.omega.0 + z * (self.omega.1 - self.omega.0),
        )
    }
}

const GRID: usize = 21;
const REFINE_ITERS: usize = 40;

/// Global grid scan followed by compass pattern search.
///
/// The scan keeps the first strict minimum in lexicographic `(v, ω)` order, so
/// ties go to the smallest grid point. The pattern search starts at the grid
/// spacing, moves only on strict improvement, and halves its step otherwise.
pub fn minimize_over_action_box<F>(objective: F, bx: &ActionBox) -> Action
where
    F: Fn(&Action) -> f64,
{
    let denom = (GRID - 1) as f64;
    let mut best = bx.lerp(0.0, 0.0);
    let mut best_val = objective(&best);
    for i in 0..GRID {
        for j in 0..GRID {
            let a = bx.lerp(i as f64 / denom, j as f64 / denom);
            let val = objective(&a);
            if val < best_val {
                best = a;
                best_val = val;
            }
        }
    }

    let mut step_v = (bx.v.1 - bx.v.0) / denom;
    let mut step_w = (bx.omega.1 - bx.omega.0) / denom;
    for _ in 0..REFINE_ITERS {
        let mut moved = false;
        for (dv, dw) in [(-step_v, 0.0), (step_v, 0.0), (0.0, -step_w), (0.0, step_w)] {
            let cand = bx.clamp(&Action::new(best.v + dv, best.omega + dw));
            let val = objective(&cand);
            if val < best_val {
                best = cand;
                best_val = val;
                moved = true;
            }
        }
        if !moved {
            step_v *= 0.5;
            step_w *= 0.5;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tb() -> ActionBox {
        ActionBox::new((-0.22, 0.22), (-2.84, 2.84))
    }

    #[test]
    fn centered_bowl() {
        let a = minimize_over_action_box(|a| a.v * a.v + a.omega * a.omega, &tb());
        assert!(a.v.abs() < 1e-9 && a.omega.abs() < 1e-9);
    }

    #[test]
    fn boundary_optimum() {
        let a = minimize_over_action_box(|a| -a.v, &tb());
        assert_eq!(a.v, 0.22);
    }

    #[test]
    fn constant_objective_takes_smallest_grid_point() {
        let a = minimize_over_action_box(|_| 1.0, &tb());
        assert_eq!(a, Action::new(-0.22, -2.84));
    }

    #[test]
    fn zone_box_is_narrow() {
        let cfg = DynamicsConfig::default();
        let zone = HotspotParams::default();
        let b = ActionBox::at_state(&State::new(-0.6, -0.5, 0.0), &cfg, &zone);
        assert_eq!(b.v, (-0.01, 0.01));
        let a = minimize_over_action_box(|a| -a.v, &b);
        assert!(b.contains(&a) && a.v == 0.01);
    }
}
