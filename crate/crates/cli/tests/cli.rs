use std::path::Path;
use std::process::{Command, Output};

fn calf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", "--seeds", "2", "--episodes", "2", "--out", out];
    args.extend_from_slice(extra);
    calf(&args)
}

#[test]
fn run_calf_writes_artifacts_and_passes_audit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), &["--agent", "calf"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("reached 100.0%"), "{text}");
    assert!(
        text.contains("stability audit: 4 of 4 episodes pass"),
        "{text}"
    );
    for f in [
        "config.toml",
        "report.json",
        "learning_curve.csv",
        "episodes.csv",
        "stability.json",
        "trajectories.svg",
    ] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    assert!(dir.path().join("trajectories/calf_seed1_ep1.csv").is_file());

    let o = calf(&["check", "--record", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o)
            .lines()
            .filter(|l| l.starts_with("pass "))
            .count(),
        4
    );
}

#[test]
fn check_flags_tampered_ledger() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(dir.path(), &["--agent", "calf"]).status.success());
    let file = dir.path().join("trajectories/calf_seed0_ep0.csv");
    let text = std::fs::read_to_string(&file).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // raise the last logged ledger value above the initial one
    let last = lines.len() - 1;
    let mut cols: Vec<String> = lines[last].split(',').map(String::from).collect();
    cols[9] = "1000000".into();
    lines[last] = cols.join(",");
    std::fs::write(&file, lines.join("\n") + "\n").unwrap();

    let o = calf(&["check", "--record", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL"));
}

#[test]
fn mpc_needs_horizon_and_plot_reads_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(dir.path(), &["--agent", "mpc"]);
    assert_eq!(o.status.code(), Some(2));

    let nominal = dir.path().join("nominal");
    let o = run_into(&nominal, &["--agent", "nominal"]);
    assert!(o.status.success());
    let plots = dir.path().join("plots");
    let o = calf(&[
        "plot",
        "--report",
        nominal.join("report.json").to_str().unwrap(),
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(plots.join("learning_curve.svg").is_file());
}

#[test]
fn config_file_is_honoured_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "agent = \"nominal\"\nseeds = [5]\nepisodes = 1\n").unwrap();
    let out = dir.path().join("o");
    let o = calf(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(out.join("trajectories/nominal_seed5_ep0.csv").is_file());

    std::fs::write(&cfg, "agent = \"nominal\"\nepisodez = 1\n").unwrap();
    let o = calf(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
