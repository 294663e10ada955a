use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use calf_core::harness::export::{agent_from_file_name, load_report, read_trajectory, write_plots};
use calf_core::{
    check_stability_invariants, export_results, run_benchmark, AgentKind, ExperimentConfig,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "calf",
    version,
    about = "CALF agent and baselines on the mobile-robot parking benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-seed benchmark and write its artifacts.
    Run {
        /// calf, sarsa, sarsa-m, nominal or mpc (with --horizon), or mpcN.
        #[arg(long)]
        agent: Option<String>,
        /// MPC prediction horizon.
        #[arg(long)]
        horizon: Option<usize>,
        /// Number of seeds; runs seeds 0..K.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        /// TOML experiment config; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit ledger guarantees of trajectory tables (a file or a directory of them).
    Check {
        #[arg(long)]
        record: PathBuf,
        /// Agent that produced the table; taken from the file name by default.
        #[arg(long)]
        agent: Option<String>,
        /// Config whose critic settings the audit uses; defaults otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Draw plots from one or more report.json files.
    Plot {
        #[arg(long, required = true, num_args = 1..)]
        report: Vec<PathBuf>,
        /// Output directory; defaults to the first report's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_agent(name: &str, horizon: Option<usize>) -> Result<AgentKind> {
    let kind = match (name, horizon) {
        ("mpc", Some(h)) => AgentKind::Mpc(h),
        ("mpc", None) => bail!("--agent mpc needs --horizon"),
        (other, _) => other.parse::<AgentKind>()?,
    };
    if horizon.is_some() && !matches!(kind, AgentKind::Mpc(_)) {
        bail!("--horizon only applies to the mpc agent");
    }
    Ok(kind)
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    })
}

fn run(
    agent: Option<String>,
    horizon: Option<usize>,
    seeds: Option<u64>,
    episodes: Option<usize>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let mut cfg = load_config(config.as_deref())?;
    match (agent, horizon) {
        (Some(a), h) => cfg.agent = parse_agent(&a, h)?,
        (None, Some(h)) if matches!(cfg.agent, AgentKind::Mpc(_)) => cfg.agent = AgentKind::Mpc(h),
        (None, Some(_)) => bail!("--horizon only applies to the mpc agent"),
        (None, None) => {}
    }
    if let Some(k) = seeds {
        cfg.seeds = (0..k).collect();
    }
    if let Some(m) = episodes {
        cfg.episodes = m;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    cfg.validate()?;

    let run = run_benchmark(&cfg)?;
    let files = export_results(&run, &cfg.output_dir)?;
    let audits: Vec<_> = run
        .records
        .iter()
        .map(|r| check_stability_invariants(r, &cfg.calf))
        .collect();
    let failed = audits.iter().filter(|a| !a.passed()).count();
    let last = run.report.final_point();
    println!(
        "{}: {} seeds x {} episodes, reached {:.1}%, final-episode median cost {:.3} [{:.3}, {:.3}]",
        cfg.agent,
        cfg.seeds.len(),
        cfg.episodes,
        100.0 * run.report.reached_fraction(),
        last.median,
        last.ci_low,
        last.ci_high
    );
    let aborted = run.records.iter().filter(|r| r.aborted.is_some()).count();
    if aborted > 0 {
        println!("{aborted} episodes aborted by solver errors");
    }
    if cfg.agent.has_ledger_guarantees() {
        println!(
            "stability audit: {} of {} episodes pass",
            audits.len() - failed,
            audits.len()
        );
    }
    println!(
        "wrote {} files to {}",
        files.len(),
        cfg.output_dir.display()
    );
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn trajectory_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let dir = if path.join("trajectories").is_dir() {
        path.join("trajectories")
    } else {
        path.to_path_buf()
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no trajectory tables in {}", dir.display());
    }
    Ok(files)
}

fn check(record: PathBuf, agent: Option<String>, config: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = load_config(config.as_deref())?;
    let forced = agent.map(|a| a.parse::<AgentKind>()).transpose()?;
    let mut failed = 0;
    for file in trajectory_files(&record)? {
        let kind = match forced.or_else(|| agent_from_file_name(&file)) {
            Some(k) => k,
            None => bail!("cannot tell the agent of {}; pass --agent", file.display()),
        };
        let rec = read_trajectory(&file, kind)?;
        let report = check_stability_invariants(&rec, &cfg.calf);
        let verdict = if !report.applicable {
            "n/a"
        } else if report.passed() {
            "pass"
        } else {
            failed += 1;
            "FAIL"
        };
        println!(
            "{verdict} {} {}",
            file.display(),
            serde_json::to_string(&report)?
        );
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn plot(reports: Vec<PathBuf>, out: Option<PathBuf>) -> Result<ExitCode> {
    let loaded = reports
        .iter()
        .map(|p| load_report(p))
        .collect::<calf_core::Result<Vec<_>>>()?;
    let dir = match out {
        Some(d) => d,
        None => reports[0]
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default(),
    };
    let refs: Vec<_> = loaded.iter().collect();
    for f in write_plots(&dir, &refs)? {
        println!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            agent,
            horizon,
            seeds,
            episodes,
            config,
            out,
        } => run(agent, horizon, seeds, episodes, config, out),
        Command::Check {
            record,
            agent,
            config,
        } => check(record, agent, config),
        Command::Plot { report, out } => plot(report, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
