//! Critic-as-Lyapunov-function agent (CALF) with its baselines on a
//! differential-drive parking task.
//!
//! The agent accepts a critic update only if the stored critic value drops
//! by a fixed margin and stays inside a pair of bounding functions; otherwise
//! it hands control to a known stabilizing controller. [`harness`] runs the
//! multi-seed benchmark and audits those guarantees at runtime.

pub mod agents;
pub mod critic;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod objective;
pub mod solvers;

pub use agents::{
    Agent, AgentKind, CalfAgent, Decision, MpcAgent, SarsaAgent, SarsaVariant, StabilizerGains,
    Verdict,
};
pub use critic::{CalfConfig, CriticWeights, Ledger};
pub use dynamics::{Action, DynamicsConfig, Plant, State};
pub use error::{CalfError, Result};
pub use harness::{
    check_stability_invariants, export_results, run_benchmark, run_episode, BenchmarkReport,
    BenchmarkRun, EpisodeRecord, ExperimentConfig, StabilityReport,
};
pub use objective::{GoalSpec, HotspotParams};
pub use solvers::{qp_solve, CemConfig, QpProblem};
