use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::benchmark::{BenchmarkReport, BenchmarkRun};
use super::episode::{EpisodeRecord, StepRow};
use super::monitor::{check_stability_invariants, StabilityReport};
use super::svg;
use crate::agents::{AgentKind, Verdict};
use crate::critic::CalfConfig;
use crate::dynamics::{Action, State};
use crate::error::{CalfError, Result};

pub const TRAJECTORY_COLUMNS: [&str; 10] = [
    "t",
    "x",
    "y",
    "theta",
    "v",
    "omega",
    "stage_cost",
    "cum_cost",
    "verdict",
    "q_dagger",
];

/// Verdict label of the extra row appended to episodes that missed the goal.
pub const PENALTY_ROW: &str = "penalty";

/// `%.12g`-style formatting: 12 significant digits, trailing zeros dropped.
pub fn sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let fixed = format!("{:.*}", (11 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trajectory_file_name(r: &EpisodeRecord) -> String {
    format!("{}_seed{}_ep{}.csv", r.agent, r.seed, r.episode)
}

fn csv_err(path: &Path, e: csv::Error) -> CalfError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CalfError::io(path, io),
        other => CalfError::Parse {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

/// Header plus one line per step; a missed episode gets a trailing penalty row
/// whose `cum_cost` is the accumulated cost with the penalty.
pub fn write_trajectory(path: &Path, r: &EpisodeRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(TRAJECTORY_COLUMNS)
        .map_err(|e| csv_err(path, e))?;
    for row in &r.rows {
        let q = row.q_dagger.map(sig12).unwrap_or_default();
        w.write_record([
            row.t.to_string(),
            sig12(row.state.x),
            sig12(row.state.y),
            sig12(row.state.theta),
            sig12(row.action.v),
            sig12(row.action.omega),
            sig12(row.stage_cost),
            sig12(row.cum_cost),
            row.verdict.as_str().to_string(),
            q,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    if !r.reached {
        let s = r.final_state;
        w.write_record([
            r.steps.to_string(),
            sig12(s.x),
            sig12(s.y),
            sig12(s.theta),
            String::new(),
            String::new(),
            sig12(r.penalty),
            sig12(r.accumulated_cost),
            PENALTY_ROW.to_string(),
            String::new(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CalfError::io(path, e))
}

/// Parses a trajectory table back into a record. Seed and episode come from
/// the file name when it follows [`trajectory_file_name`], else 0. For a
/// reached episode the final state is the last logged pre-step state, since
/// the table does not store the state after the last step.
pub fn read_trajectory(path: &Path, agent: AgentKind) -> Result<EpisodeRecord> {
    let bad = |msg: String| CalfError::Parse {
        path: path.to_path_buf(),
        msg,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(TRAJECTORY_COLUMNS) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| bad(format!("line {line}: bad number {s:?}")))
    };

    let mut rows = Vec::new();
    let mut penalty_row: Option<(State, f64, f64)> = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = i + 2;
        if penalty_row.is_some() {
            return Err(bad(format!("line {line}: data after the penalty row")));
        }
        let state = State::new(
            num(&rec[1], line)?,
            num(&rec[2], line)?,
            num(&rec[3], line)?,
        );
        if &rec[8] == PENALTY_ROW {
            penalty_row = Some((state, num(&rec[6], line)?, num(&rec[7], line)?));
            continue;
        }
        let t: usize = rec[0]
            .parse()
            .map_err(|_| bad(format!("line {line}: bad step index")))?;
        rows.push(StepRow {
            t,
            state,
            action: Action::new(num(&rec[4], line)?, num(&rec[5], line)?),
            stage_cost: num(&rec[6], line)?,
            cum_cost: num(&rec[7], line)?,
            verdict: rec[8]
                .parse::<Verdict>()
                .map_err(|e| bad(format!("line {line}: {e}")))?,
            q_dagger: if rec[9].is_empty() {
                None
            } else {
                Some(num(&rec[9], line)?)
            },
        });
    }

    let (seed, episode) = parse_file_name(path).unwrap_or((0, 0));
    let stage_total = rows.last().map_or(0.0, |r| r.cum_cost);
    let (final_state, penalty, accumulated_cost) = match penalty_row {
        Some((s, p, total)) => (s, p, total),
        None => (
            rows.last().map_or(State::default(), |r| r.state),
            0.0,
            stage_total,
        ),
    };
    Ok(EpisodeRecord {
        agent,
        seed,
        episode,
        steps: rows.len(),
        rows,
        final_state,
        reached: penalty_row.is_none(),
        accumulated_cost,
        penalty,
        aborted: None,
    })
}

fn parse_file_name(path: &Path) -> Option<(u64, usize)> {
    let stem = path.file_stem()?.to_str()?;
    let (rest, ep) = stem.rsplit_once("_ep")?;
    let (_, seed) = rest.rsplit_once("_seed")?;
    Some((seed.parse().ok()?, ep.parse().ok()?))
}

/// Agent name encoded in a trajectory file name, if any.
pub fn agent_from_file_name(path: &Path) -> Option<AgentKind> {
    let stem = path.file_stem()?.to_str()?;
    let (agent, _) = stem.rsplit_once("_seed")?;
    agent.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub seed: u64,
    pub episode: usize,
    #[serde(flatten)]
    pub report: StabilityReport,
}

pub fn stability_entries(records: &[EpisodeRecord], cfg: &CalfConfig) -> Vec<StabilityEntry> {
    records
        .iter()
        .map(|r| StabilityEntry {
            seed: r.seed,
            episode: r.episode,
            report: check_stability_invariants(r, cfg),
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CalfError::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn write_learning_curve(path: &Path, report: &BenchmarkReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["episode", "median", "ci_low", "ci_high", "reached_fraction"])
        .map_err(|e| csv_err(path, e))?;
    for p in &report.curve {
        w.write_record([
            p.episode.to_string(),
            sig12(p.median),
            sig12(p.ci_low),
            sig12(p.ci_high),
            sig12(p.reached_fraction),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CalfError::io(path, e))
}

/// Per-seed, per-episode accumulated costs in long form.
pub fn write_episode_costs(path: &Path, report: &BenchmarkReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["seed", "episode", "accumulated_cost", "reached"])
        .map_err(|e| csv_err(path, e))?;
    for s in &report.seeds {
        for (e, (c, r)) in s.costs.iter().zip(&s.reached).enumerate() {
            w.write_record([s.seed.to_string(), e.to_string(), sig12(*c), r.to_string()])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| CalfError::io(path, e))
}

/// Writes the three plots for `reports` into `dir`.
pub fn write_plots(dir: &Path, reports: &[&BenchmarkReport]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CalfError::io(dir, e))?;
    let files = [
        ("learning_curve.svg", svg::learning_curve_svg(reports)),
        ("cost_vs_time.svg", svg::cost_vs_time_svg(reports)),
        ("trajectories.svg", svg::trajectories_svg(reports)),
    ];
    files
        .into_iter()
        .map(|(name, body)| {
            let p = dir.join(name);
            write_file(&p, &body).map(|_| p)
        })
        .collect()
}

/// Persists everything about a run under `dir` and returns the files written.
///
/// Layout: `config.toml`, `report.json`, `learning_curve.csv`,
/// `episodes.csv`, `stability.json`, three SVG plots and one table per
/// episode under `trajectories/`.
pub fn export_results(run: &BenchmarkRun, dir: &Path) -> Result<Vec<PathBuf>> {
    let traj_dir = dir.join("trajectories");
    fs::create_dir_all(&traj_dir).map_err(|e| CalfError::io(&traj_dir, e))?;
    let report = &run.report;
    let mut written = Vec::new();

    let p = dir.join("config.toml");
    write_file(&p, &report.config.to_toml_string())?;
    written.push(p);
    let p = dir.join("report.json");
    write_file(&p, &to_json(report))?;
    written.push(p);
    let p = dir.join("learning_curve.csv");
    write_learning_curve(&p, report)?;
    written.push(p);
    let p = dir.join("episodes.csv");
    write_episode_costs(&p, report)?;
    written.push(p);
    let p = dir.join("stability.json");
    write_file(
        &p,
        &to_json(&stability_entries(&run.records, &report.config.calf)),
    )?;
    written.push(p);
    written.extend(write_plots(dir, &[report])?);

    for r in &run.records {
        let p = traj_dir.join(trajectory_file_name(r));
        write_trajectory(&p, r)?;
        written.push(p);
    }
    Ok(written)
}

pub fn load_report(path: &Path) -> Result<BenchmarkReport> {
    let text = fs::read_to_string(path).map_err(|e| CalfError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CalfError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}
