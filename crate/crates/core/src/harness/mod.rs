//! Episode runner, multi-seed benchmarks, stability audits and artifacts.

pub mod benchmark;
pub mod config;
pub mod episode;
pub mod export;
pub mod monitor;
pub mod rng;
pub mod svg;

pub use benchmark::{
    aggregate, run_benchmark, BenchmarkReport, BenchmarkRun, CurvePoint, SeedSummary,
};
pub use config::ExperimentConfig;
pub use episode::{run_episode, run_seed, EpisodeRecord, StepRow};
pub use export::{export_results, load_report, read_trajectory, write_plots, write_trajectory};
pub use monitor::{check_stability_invariants, StabilityReport};
pub use rng::episode_rng;
