//! End-to-end checks of the `bpsim` binary: exit codes, output files, and
//! byte determinism of the data outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bpsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpsim"))
        .args(args)
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("binary runs")
}

fn star_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/star.toml")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn validate_accepts_the_shipped_scenario() {
    let out = bpsim(&["validate", "--scenario", star_path().to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("ok"));
}

#[test]
fn validate_reports_violations_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(star_path()).unwrap().replace("route = [0, 2]", "route = [0, 9]");
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, text).unwrap();
    let out = bpsim(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("unknown link"), "stdout: {}", stdout(&out));
}

#[test]
fn validate_missing_file_fails() {
    let out = bpsim(&["validate", "--scenario", "/no/such/file.toml"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("reading scenario"));
}

#[test]
fn capacity_reports_boundary_and_normal() {
    let out = bpsim(&["capacity", "--scenario", star_path().to_str().unwrap(), "--direction", "1,1"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("theta*           0.654297"), "{text}");
    assert!(text.contains("psi (aggregate)  (0.707107, 0.707107)"), "{text}");
    assert!(text.contains("queue approx"), "{text}");
}

#[test]
fn simulate_analyze_round_trip_with_deterministic_outputs() {
    let scenario = star_path();
    let scenario = scenario.to_str().unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let out = bpsim(&[
            "simulate",
            "--scenario",
            scenario,
            "--horizon",
            "2000",
            "--reps",
            "2",
            "--jobs",
            jobs,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    for name in ["summary.csv", "rep0.csv", "rep1.csv", "rep0.bptj", "scenario.toml"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs across runs/job counts");
    }
    let summary = fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("# bpsim-csv v1 summary\n"));
    assert!(summary.lines().nth(1).unwrap().starts_with("flow,"));

    // Analysis of the recorded dump.
    let ana = tempfile::tempdir().unwrap();
    let out = bpsim(&[
        "analyze",
        "--scenario",
        scenario,
        "--dump",
        a.path().join("rep0.bptj").to_str().unwrap(),
        "--out",
        ana.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("workload decomposition"), "{text}");
    assert!(text.contains("ssc distance"), "{text}");
    assert!(ana.path().join("analysis.txt").exists());
    let uvw = fs::read_to_string(ana.path().join("uvw.csv")).unwrap();
    assert!(uvw.starts_with("# bpsim-csv v1 uvw\nslot,w,u,v,x,regulator_v,reflected_w\n"));
}

#[test]
fn analyze_rejects_truncated_and_mismatched_dumps() {
    let scenario = star_path();
    let scenario = scenario.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = bpsim(&[
        "simulate",
        "--scenario",
        scenario,
        "--horizon",
        "500",
        "--reps",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let dump = dir.path().join("rep0.bptj");
    let mut bytes = fs::read(&dump).unwrap();
    bytes.truncate(bytes.len() / 2);
    let broken = dir.path().join("broken.bptj");
    fs::write(&broken, bytes).unwrap();
    let out = bpsim(&["analyze", "--scenario", scenario, "--dump", broken.to_str().unwrap()]);
    assert!(!out.status.success());

    // A structurally different scenario must be refused.
    let other = dir.path().join("other.toml");
    let text = r#"
schema = 1
name = "single-link"

[network]
nodes = 2
links = [[0, 1]]
interference = "node-exclusive"

[channel]
kind = "uniform-product"
gains = [1]

[[flows]]
source = 0
destination = 1
route = [0]
arrival = { family = "poisson", mean = 0.4 }
a1 = 1.0
a2 = 1.0
target_queue = 10.0

[experiment]
horizon = 1000
replications = 1
seed = 0
"#;
    fs::write(&other, text).unwrap();
    let out = bpsim(&["analyze", "--scenario", other.to_str().unwrap(), "--dump", dump.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("does not match"), "stderr: {}", stderr(&out));
}

#[test]
fn table2_emits_the_reference_approximation_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpsim(&[
        "table2",
        "--lambdas",
        "0.64,0.645",
        "--horizon",
        "400",
        "--reps",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# bpsim-csv v1 table2"));
    assert_eq!(lines.next(), Some("lambda,simulated,approximation"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "0.64");
    assert_eq!(row[2], "232.000000");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[2], "464.500000");
}

#[test]
fn table_commands_reject_an_empty_grid() {
    let out = bpsim(&["table2", "--lambdas", "", "--horizon", "100", "--reps", "1"]);
    assert!(!out.status.success());
    let out = bpsim(&["table3", "--lambdas", " ", "--horizon", "100", "--reps", "1"]);
    assert!(!out.status.success());
}

#[test]
fn table3_reports_targets_and_obtained() {
    let out = bpsim(&["table3", "--lambdas", "0.63", "--horizon", "400", "--reps", "1"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("lambda,target_1,target_2,obtained_1,obtained_2"));
    assert!(text.contains("0.63,250,100,"), "{text}");
}
