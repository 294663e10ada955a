use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::episode::{run_seed, EpisodeRecord};
use crate::error::Result;

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const CONFIDENCE: f64 = 0.95;

/// Stream id reserved for the bootstrap, out of reach of seed streams
/// in practice.
const BOOTSTRAP_STREAM: u64 = u64::MAX;

/// Learning-curve point: accumulated cost of episode `episode` across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reached_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    /// Accumulated cost of each episode, penalty included.
    pub costs: Vec<f64>,
    pub reached: Vec<bool>,
    pub aborted: Vec<Option<String>>,
    /// Cheapest episode; the first one wins ties.
    pub best_episode: usize,
    /// Cumulative stage cost against time for the best episode.
    pub best_cost_series: Vec<f64>,
    /// Planar path of the best episode, start pose first.
    pub best_trajectory: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedSummary>,
    pub curve: Vec<CurvePoint>,
}

impl BenchmarkReport {
    pub fn final_point(&self) -> &CurvePoint {
        self.curve.last().expect("at least one episode")
    }

    pub fn reached_fraction(&self) -> f64 {
        let (hit, n) = self
            .seeds
            .iter()
            .flat_map(|s| &s.reached)
            .fold((0, 0), |(h, n), &r| (h + r as usize, n + 1));
        hit as f64 / n as f64
    }
}

/// Report plus every episode record, seed-major.
#[derive(Debug, Clone)]
pub struct BenchmarkRun {
    pub report: BenchmarkReport,
    pub records: Vec<EpisodeRecord>,
}

/// Runs every configured seed (in parallel) and aggregates in seed order.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchmarkRun> {
    cfg.validate()?;
    let per_seed: Vec<Vec<EpisodeRecord>> =
        cfg.seeds.par_iter().map(|&s| run_seed(cfg, s)).collect();
    let report = aggregate(cfg, &per_seed);
    Ok(BenchmarkRun {
        report,
        records: per_seed.into_iter().flatten().collect(),
    })
}

/// Builds the report from records grouped by seed, in `cfg.seeds` order.
pub fn aggregate(cfg: &ExperimentConfig, per_seed: &[Vec<EpisodeRecord>]) -> BenchmarkReport {
    let seeds: Vec<SeedSummary> = per_seed
        .iter()
        .map(|recs| summarize_seed(cfg, recs))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(BOOTSTRAP_STREAM);
    let curve = (0..cfg.episodes)
        .map(|e| {
            let costs: Vec<f64> = seeds.iter().map(|s| s.costs[e]).collect();
            let (ci_low, ci_high) =
                bootstrap_median_ci(&costs, BOOTSTRAP_RESAMPLES, CONFIDENCE, &mut rng);
            let hits = seeds.iter().filter(|s| s.reached[e]).count();
            CurvePoint {
                episode: e,
                median: median(&costs),
                ci_low,
                ci_high,
                reached_fraction: hits as f64 / seeds.len() as f64,
            }
        })
        .collect();
    BenchmarkReport {
        config: cfg.clone(),
        seeds,
        curve,
    }
}

fn summarize_seed(cfg: &ExperimentConfig, recs: &[EpisodeRecord]) -> SeedSummary {
    let costs: Vec<f64> = recs.iter().map(|r| r.accumulated_cost).collect();
    let best_episode = costs
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c < costs[best] { i } else { best });
    let best = &recs[best_episode];
    let mut best_trajectory: Vec<[f64; 2]> =
        best.rows.iter().map(|r| [r.state.x, r.state.y]).collect();
    best_trajectory.push([best.final_state.x, best.final_state.y]);
    if best.rows.is_empty() {
        best_trajectory = vec![[cfg.start.x, cfg.start.y]];
    }
    SeedSummary {
        seed: best.seed,
        costs,
        reached: recs.iter().map(|r| r.reached).collect(),
        aborted: recs.iter().map(|r| r.aborted.clone()).collect(),
        best_episode,
        best_cost_series: best.rows.iter().map(|r| r.cum_cost).collect(),
        best_trajectory,
    }
}

/// Median with the midpoint rule for even counts. NaN for an empty slice.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Percentile bootstrap interval for the median.
pub fn bootstrap_median_ci<R: Rng + ?Sized>(
    xs: &[f64],
    resamples: usize,
    level: f64,
    rng: &mut R,
) -> (f64, f64) {
    let n = xs.len();
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let sample: Vec<f64> = (0..n).map(|_| xs[rng.random_range(0..n)]).collect();
            median(&sample)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    (
        quantile_sorted(&stats, tail),
        quantile_sorted(&stats, 1.0 - tail),
    )
}

/// Linear-interpolated quantile of sorted data.
fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}
