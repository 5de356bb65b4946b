use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qevo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qevo"))
        .current_dir(dir)
        .args(args)
        .env_remove("RUST_BACKTRACE")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = qevo(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn run_aggregate_plot_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("exp.toml"),
        "concept = \"layer\"\nstrategy = \"laremu\"\ngenerations = 3\npopulation = 6\nseeds = [0, 1]\nout_dir = \"out\"\n",
    )
    .unwrap();
    let stdout = ok(d, &["run", "--config", "exp.toml", "--quiet", "--jobs", "2"]);
    assert!(stdout.contains("layer_laremu.csv"));
    let csv = fs::read_to_string(d.join("out/layer_laremu.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert!(d.join("out/layer_laremu_timing.csv").exists());

    ok(d, &["aggregate", "out/layer_laremu.csv", "--out", "agg.csv"]);
    let agg = fs::read_to_string(d.join("agg.csv")).unwrap();
    assert!(agg.starts_with("generation,seeds,best_score_mean,best_score_std"));
    assert_eq!(agg.lines().count(), 4);

    let plotted = ok(d, &["plot", "agg.csv", "--out", "charts"]);
    assert_eq!(plotted.lines().count(), 5);

    let trace = ok(d, &["replay", "out/layer_laremu_seed1.checkpoint.json", "--seed", "7"]);
    assert_eq!(trace.lines().count(), 51);
    assert_eq!(trace, ok(d, &["replay", "out/layer_laremu_seed1.checkpoint.json", "--seed", "7"]));
}

#[test]
fn resume_extends_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let common = ["--concept", "gate", "--population", "6", "--seed", "2", "-q"];
    ok(d, &[&["run", "--out", "full", "--generations", "5"][..], &common].concat());
    ok(d, &[&["run", "--out", "part", "--generations", "2"][..], &common].concat());
    ok(d, &["run", "--resume", "part/gate_archmu_seed2.checkpoint.json", "--generations", "5", "-q"]);
    assert_eq!(
        fs::read(d.join("full/gate_archmu.csv")).unwrap(),
        fs::read(d.join("part/gate_archmu.csv")).unwrap()
    );
}

#[test]
fn rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(!qevo(d, &["run", "--concept", "nn", "--strategy", "archmu"]).status.success());
    assert!(!qevo(d, &["run", "--concept", "quokka"]).status.success());
    assert!(!qevo(d, &["run"]).status.success());
    assert!(!qevo(d, &["replay", "missing.json"]).status.success());

    fs::write(d.join("empty.csv"), "generation,seeds\n").unwrap();
    let out = qevo(d, &["plot", "empty.csv"]);
    assert!(!out.status.success(), "aggregate file without metric columns is rejected");
}

#[test]
fn plot_without_rows_warns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["run", "--concept", "random", "--generations", "1", "--population", "2", "--seed", "0", "--out", "r", "-q"]);
    let header = fs::read_to_string(d.join("r/random_mu.csv")).unwrap().lines().next().unwrap().to_string();
    fs::write(d.join("none.csv"), header + "\n").unwrap();
    ok(d, &["aggregate", "none.csv", "--out", "none_aggregate.csv"]);
    let out = qevo(d, &["plot", "none_aggregate.csv", "--out", "charts"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert!(!d.join("charts").exists());
}
