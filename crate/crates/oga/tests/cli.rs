use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use oga::report::{read_decisions, read_metrics, read_trace_csv, EffectiveConfig};
use oga::scenario_file::{parse_scenario, read_scenario, scenario_to_string};
use oga_core::scenario::validate_scenario;
use oga_core::Mode;

fn oga(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oga"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn swap_scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/overtaking-swap.toml")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_writes_outputs_that_read_back() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = oga(&[
        "run",
        "--scenario",
        swap_scenario().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("CONVERGED"));

    let trace = read_trace_csv(&read(&out, "trace.csv")).unwrap();
    assert!(trace.len() > 1);
    assert_eq!(trace[0].t, 0.0);
    assert_eq!(trace[0].agents.len(), 2);
    assert_eq!((trace[0].agents[0].x, trace[0].agents[0].y), (0.0, 0.0));
    assert!(trace.iter().all(|r| r.min_clearance > 0.0));
    assert!(trace
        .iter()
        .any(|r| r.agents.iter().any(|a| a.mode == Mode::Lr)));
    let last = trace.last().unwrap();
    assert_eq!((last.agents[0].goal, last.agents[1].goal), (0, 1));

    let decisions = read_decisions(&read(&out, "decisions.csv")).unwrap();
    assert_eq!(decisions[0].time, 0.0);
    assert_eq!(decisions[0].members, vec![0, 1]);
    assert!(decisions[0].changed);
    assert!(decisions[0].new_cost < decisions[0].old_cost);

    let metrics = read_metrics(&read(&out, "metrics.txt")).unwrap();
    assert_eq!(metrics["termination"], "CONVERGED");
    assert!(metrics["lr_fraction"].parse::<f64>().unwrap() > 0.0);
    assert!(metrics["min_clearance"].parse::<f64>().unwrap() > 0.0);
    assert_eq!(metrics["steps"].parse::<usize>().unwrap(), trace.len() - 1);

    let echoed = read_scenario(&out.join("scenario.toml")).unwrap();
    assert_eq!(echoed, read_scenario(&swap_scenario()).unwrap());
    let config: EffectiveConfig = toml::from_str(&read(&out, "config.toml")).unwrap();
    assert_eq!(config.dt, 1e-3);
    assert_eq!(config.q_band, 0.2);

    let surface = read(&out, "surface.csv");
    assert!(surface.starts_with("t,q0,W0,q1,W1\n"));
}

#[test]
fn overrides_reach_the_echoed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = oga(&[
        "run",
        "--scenario",
        swap_scenario().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--dt",
        "0.002",
        "--max-time",
        "0.5",
        "--eps-q",
        "0.3",
        "--delta-aggregation",
        "2",
    ]);
    assert_eq!(
        o.status.code(),
        Some(10),
        "timeout expected: {}",
        stderr(&o)
    );
    let config: EffectiveConfig = toml::from_str(&read(&out, "config.toml")).unwrap();
    assert_eq!(
        (
            config.dt,
            config.max_time,
            config.q_band,
            config.aggregation_power
        ),
        (0.002, 0.5, 0.3, 2.0)
    );
    let metrics = read_metrics(&read(&out, "metrics.txt")).unwrap();
    assert_eq!(metrics["termination"], "TIMEOUT");
    let echoed = read_scenario(&out.join("scenario.toml")).unwrap();
    assert_eq!(echoed.dt, 0.002);
}

#[test]
fn collision_has_its_own_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = oga(&[
        "run",
        "--scenario",
        swap_scenario().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--supervisor",
        "oga-only",
    ]);
    assert_eq!(o.status.code(), Some(11));
    let metrics = read_metrics(&read(&out, "metrics.txt")).unwrap();
    assert_eq!(metrics["termination"], "BREACH");
    assert_eq!(metrics["breach"], "collision 0 1");
}

#[test]
fn small_workspace_is_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = read_scenario(&swap_scenario()).unwrap();
    s.workspace_radius = 1.0;
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, scenario_to_string(&s)).unwrap();
    let o = oga(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("R_0"), "{}", stderr(&o));
}

#[test]
fn unknown_scenario_fields_are_rejected() {
    let text = std::fs::read_to_string(swap_scenario()).unwrap();
    let e = parse_scenario(&format!("comm_radius = 2.0\n{text}"), "x.toml").unwrap_err();
    assert!(e.to_string().contains("comm_radius"), "{e}");

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("extra.toml");
    std::fs::write(&path, format!("colour = \"red\"\n{text}")).unwrap();
    let o = oga(&["run", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn missing_inputs_and_bad_usage() {
    let o = oga(&["run", "--scenario", "/nonexistent/s.toml"]);
    assert_eq!(o.status.code(), Some(4));
    let o = oga(&["run"]);
    assert_eq!(o.status.code(), Some(2));
    let o = oga(&["run", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_is_deterministic_and_valid() {
    let a = oga(&["gen", "--seed", "42"]);
    let b = oga(&["gen", "--seed", "42"]);
    let c = oga(&["gen", "--seed", "43"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let s = parse_scenario(&stdout(&a), "gen").unwrap();
    assert_eq!(s.agents.len(), 10);
    assert_eq!(s.comm_range, 5.0 * 0.25);
    validate_scenario(s).unwrap();
}

#[test]
fn gen_reports_a_crowded_disc() {
    let o = oga(&["gen", "-n", "60", "--placement-radius", "1.0"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("error:"));
}

#[test]
fn assign_prints_the_optimal_permutation() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.txt");
    std::fs::write(&path, "3\n4 1 3\n2 0 5\n3 2 2\n").unwrap();
    let o = oga(&["assign", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0→1 1→0 2→2 cost=5");

    std::fs::write(&path, "2\n1 2\n3 oops\n").unwrap();
    let o = oga(&["assign", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("row 2, column 2"));
}

#[test]
fn batch_summarizes_every_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("batch");
    let o = oga(&[
        "batch",
        "--seed",
        "3",
        "--count",
        "2",
        "--workers",
        "2",
        "-n",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let summary = read(&out, "batch.txt");
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("3,CONVERGED"));
    assert!(lines[2].starts_with("4,CONVERGED"));
    assert!(out.join("seed-0003").join("trace.csv").exists());
}

#[test]
fn bench_writes_a_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench.txt");
    let o = oga(&[
        "bench",
        "--sizes",
        "4,8",
        "--repeats",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(out).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert_eq!(oga(&["bench", "--sizes", "1"]).status.code(), Some(2));
}
