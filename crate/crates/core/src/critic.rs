//! Quadratic action-value critic, TD(1) loss, and the constrained update that
//! lets the critic act as a Lyapunov function.
//!
//! The critic is linear in its weights over the 15 degree-two monomials of
//! `(x, y, ϑ, v, ω)`. The TD(1) loss is then a convex quadratic in `w`, and
//! the decay and sandwich constraints are affine in `w`, so one update is a
//! small QP with a clean feasible/infeasible outcome.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Action, State};
use crate::error::{CalfError, Result};
use crate::objective::Transition;
use crate::solvers::{qp_solve, QpProblem};

pub const N_FEATURES: usize = 15;

/// Monomials in the order
/// `x², xy, xϑ, xv, xω, y², yϑ, yv, yω, ϑ², ϑv, ϑω, v², vω, ω²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticWeights(pub [f64; N_FEATURES]);

impl CriticWeights {
    pub const ZERO: CriticWeights = CriticWeights([0.0; N_FEATURES]);

    pub fn dot(&self, f: &FeatureVector) -> f64 {
        self.0.iter().zip(&f.0).map(|(w, x)| w * x).sum()
    }

    pub fn in_box(&self, half_width: f64) -> bool {
        self.0
            .iter()
            .all(|w| w.is_finite() && w.abs() <= half_width)
    }

    fn dist_sq(&self, other: &CriticWeights) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).powi(2))
            .sum()
    }
}

// indices of the pure state squares in the feature vector
const X2: usize = 0;
const Y2: usize = 5;
const T2: usize = 9;

pub fn features(state: &State, action: &Action) -> FeatureVector {
    let z = [state.x, state.y, state.theta, action.v, action.omega];
    let mut out = [0.0; N_FEATURES];
    let mut k = 0;
    for i in 0..5 {
        for j in i..5 {
            out[k] = z[i] * z[j];
            k += 1;
        }
    }
    FeatureVector(out)
}

pub fn q_value(w: &CriticWeights, state: &State, action: &Action) -> f64 {
    w.dot(&features(state, action))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalfConfig {
    /// Required decrease of the stored critic value per accepted update.
    pub nu_bar: f64,
    pub c_low: f64,
    pub c_up: f64,
    /// Critic learning rate; the loss regularizer is `lr_crit⁻²‖w − w†‖²`.
    pub lr_crit: f64,
    pub buffer_len: usize,
    /// Half-width of the weight box.
    pub w_bound: f64,
    /// Planar radius inside which the critic is switched off; `0` disables.
    pub goal_gate: f64,
    pub feas_tol: f64,
}

impl Default for CalfConfig {
    fn default() -> Self {
        Self {
            nu_bar: 0.01,
            c_low: 1e-3,
            c_up: 1e3,
            lr_crit: 0.1,
            buffer_len: 16,
            w_bound: 1e4,
            goal_gate: 0.24,
            feas_tol: 1e-8,
        }
    }
}

impl CalfConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.nu_bar > 0.0
            && self.c_low > 0.0
            && self.c_low < self.c_up
            && self.lr_crit > 0.0
            && self.buffer_len >= 1
            && self.w_bound > 0.0
            && self.goal_gate >= 0.0
            && self.feas_tol > 0.0
            && [
                self.nu_bar,
                self.c_low,
                self.c_up,
                self.lr_crit,
                self.w_bound,
                self.goal_gate,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(CalfError::Config(format!("invalid critic config {self:?}")))
        }
    }

    pub fn kappa_low(&self, state: &State) -> f64 {
        self.c_low * state.norm_sq()
    }

    pub fn kappa_up(&self, state: &State) -> f64 {
        self.c_up * state.norm_sq()
    }

    pub fn gated(&self, state: &State) -> bool {
        self.goal_gate > 0.0 && state.planar_norm() <= self.goal_gate
    }
}

/// `κ_low(‖s‖) ≤ q ≤ κ_up(‖s‖)` with quadratic κ, relaxed by `feas_tol`.
pub fn kappa_bounds_ok(cfg: &CalfConfig, state: &State, q: f64) -> bool {
    cfg.kappa_low(state) - cfg.feas_tol <= q && q <= cfg.kappa_up(state) + cfg.feas_tol
}

/// The stored triple `(w†, s†, a†)` and its cached value `Q̂†`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    w_dagger: CriticWeights,
    s_dagger: State,
    a_dagger: Action,
    q_dagger: f64,
}

impl Ledger {
    pub fn new(w: CriticWeights, s: State, a: Action) -> Self {
        Self {
            q_dagger: q_value(&w, &s, &a),
            w_dagger: w,
            s_dagger: s,
            a_dagger: a,
        }
    }

    pub fn weights(&self) -> &CriticWeights {
        &self.w_dagger
    }

    pub fn state(&self) -> &State {
        &self.s_dagger
    }

    pub fn action(&self) -> &Action {
        &self.a_dagger
    }

    pub fn q_dagger(&self) -> f64 {
        self.q_dagger
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferEntry {
    pub transition: Transition,
    /// The on-policy action taken at `transition.next_state`.
    pub next_action: Action,
}

/// The most recent on-policy transitions, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<BufferEntry>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            entries: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn push(&mut self, transition: Transition, next_action: Action) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(BufferEntry {
            transition,
            next_action,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = &BufferEntry> {
        self.entries.iter()
    }
}

fn td_target(ledger: &Ledger, e: &BufferEntry) -> f64 {
    e.transition.cost + q_value(ledger.weights(), &e.transition.next_state, &e.next_action)
}

/// TD(1) on-policy loss with the target evaluated at the frozen `w†`.
pub fn td1_loss(
    w: &CriticWeights,
    ledger: &Ledger,
    buffer: &ReplayBuffer,
    cfg: &CalfConfig,
) -> f64 {
    let residuals: f64 = buffer
        .iter()
        .map(|e| {
            let r = q_value(w, &e.transition.state, &e.transition.action) - td_target(ledger, e);
            r * r
        })
        .sum();
    residuals + w.dist_sq(ledger.weights()) / (cfg.lr_crit * cfg.lr_crit)
}

/// [`td1_loss`] written as `½ wᵀHw + gᵀw + c`; returns the QP (without
/// inequalities) and the constant `c`.
pub fn td1_problem(ledger: &Ledger, buffer: &ReplayBuffer, cfg: &CalfConfig) -> (QpProblem, f64) {
    let n = N_FEATURES;
    let reg = 1.0 / (cfg.lr_crit * cfg.lr_crit);
    let mut h = vec![0.0; n * n];
    let mut g = vec![0.0; n];
    let mut constant = reg * ledger.weights().dist_sq(&CriticWeights::ZERO);
    for e in buffer.iter() {
        let phi = features(&e.transition.state, &e.transition.action).0;
        let y = td_target(ledger, e);
        for i in 0..n {
            g[i] -= 2.0 * y * phi[i];
            for j in 0..n {
                h[i * n + j] += 2.0 * phi[i] * phi[j];
            }
        }
        constant += y * y;
    }
    for i in 0..n {
        h[i * n + i] += 2.0 * reg;
        g[i] -= 2.0 * reg * ledger.weights().0[i];
    }
    (
        QpProblem {
            h,
            g,
            inequalities: Vec::new(),
            box_half_width: cfg.w_bound,
        },
        constant,
    )
}

/// Initial weights on the state squares, scaled so that
/// `Q̂(s₀, a₀) = √(c_low·c_up)·‖s₀‖²`, which sits inside the κ sandwich.
///
/// Each square `sᵢ²` receives weight proportional to `sᵢ²`.
pub fn init_weights(state0: &State, action0: &Action, cfg: &CalfConfig) -> Result<CriticWeights> {
    let norm_sq = state0.norm_sq();
    if !(norm_sq > 0.0) || !norm_sq.is_finite() {
        return Err(CalfError::Init(format!(
            "cannot place the critic sandwich at {state0:?}"
        )));
    }
    let target = (cfg.c_low * cfg.c_up).sqrt() * norm_sq;
    let sq = [
        state0.x * state0.x,
        state0.y * state0.y,
        state0.theta * state0.theta,
    ];
    let quartic: f64 = sq.iter().map(|v| v * v).sum();
    let mut w = CriticWeights::ZERO;
    for (idx, s2) in [X2, Y2, T2].into_iter().zip(sq) {
        w.0[idx] = target * s2 / quartic;
    }
    if !w.in_box(cfg.w_bound) {
        return Err(CalfError::Init(format!(
            "initial weights {w:?} exceed the weight box {}",
            cfg.w_bound
        )));
    }
    debug_assert!(kappa_bounds_ok(cfg, state0, q_value(&w, state0, action0)));
    Ok(w)
}

/// The three affine rows of the critic update at `(state, action)`:
/// decay below `Q̂† − ν̄` and the two κ bounds.
pub fn update_constraints(
    ledger: &Ledger,
    state: &State,
    action: &Action,
    cfg: &CalfConfig,
) -> Vec<(Vec<f64>, f64)> {
    let phi = features(state, action).0.to_vec();
    let neg: Vec<f64> = phi.iter().map(|v| -v).collect();
    vec![
        (phi.clone(), ledger.q_dagger() - cfg.nu_bar),
        (phi, cfg.kappa_up(state)),
        (neg, -cfg.kappa_low(state)),
    ]
}

/// Whether `w` satisfies the decay and sandwich constraints at
/// `(state, action)` within `feas_tol`.
pub fn constraints_hold(
    w: &CriticWeights,
    ledger: &Ledger,
    state: &State,
    action: &Action,
    cfg: &CalfConfig,
) -> bool {
    let q = q_value(w, state, action);
    q <= ledger.q_dagger() - cfg.nu_bar + cfg.feas_tol && kappa_bounds_ok(cfg, state, q)
}

/// Minimizes the TD(1) loss over the weight box subject to the update
/// constraints at `(state, action)`.
///
/// `Ok(None)` means no admissible weights exist (or none were found within
/// `feas_tol`); the caller then falls back to the stabilizer.
pub fn try_critic_update(
    ledger: &Ledger,
    buffer: &ReplayBuffer,
    state: &State,
    action: &Action,
    cfg: &CalfConfig,
) -> Result<Option<CriticWeights>> {
    let (mut problem, _) = td1_problem(ledger, buffer, cfg);
    problem.inequalities = update_constraints(ledger, state, action, cfg);
    let start = ledger.weights().0;
    let Some(w) = qp_solve(&problem, &start, cfg.feas_tol)? else {
        return Ok(None);
    };
    let mut out = CriticWeights::ZERO;
    out.0.copy_from_slice(&w);
    if !out.in_box(cfg.w_bound) || !constraints_hold(&out, ledger, state, action, cfg) {
        return Ok(None);
    }
    Ok(Some(out))
}

/// Plain TD(1) step: the loss minimized over the weight box only.
pub fn unconstrained_update(
    ledger: &Ledger,
    buffer: &ReplayBuffer,
    cfg: &CalfConfig,
) -> Result<CriticWeights> {
    let (problem, _) = td1_problem(ledger, buffer, cfg);
    let w = qp_solve(&problem, &ledger.weights().0, cfg.feas_tol)?
        .ok_or_else(|| CalfError::Solver("box-only TD problem reported infeasible".into()))?;
    let mut out = CriticWeights::ZERO;
    out.0.copy_from_slice(&w);
    Ok(out)
}
