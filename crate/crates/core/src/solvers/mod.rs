//! Numerical workhorses: the constrained QP behind the critic update, the
//! greedy action search, and the cross-entropy planner used by MPC.

mod action_box;
mod cem;
mod qp;

pub use action_box::{minimize_over_action_box, ActionBox};
pub use cem::{cem_plan, CemConfig, CemPlan};
pub use qp::{qp_solve, QpProblem};
