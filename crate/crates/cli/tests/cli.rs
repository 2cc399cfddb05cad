//! End-to-end tests against the built binary: artifact round-trips,
//! reproducibility, row counts, and the exit-code taxonomy.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hooksmith::design::tool_fitness;
use hooksmith::eval::evaluate_robustness;
use hooksmith::geometry::parse_obj;
use hooksmith::{DesignConfig, PerturbationSpec, RobustnessReport, ToolParams};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hooksmith"))
}

fn run_ok(args: &[&str], extra_env: &[(&str, &str)]) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    for (k, v) in extra_env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("no signal")
}

const SMALL: &str = r#"{
  "design": {
    "max_spacing": 0.02,
    "optimizer": { "population": 4, "iterations": 2 }
  },
  "perturbation": { "perturbed_masses": [0.3, 0.5] }
}"#;

fn write_small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, SMALL).unwrap();
    path
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn design_from_snapshot(dir: &Path) -> DesignConfig {
    let v: serde_json::Value = serde_json::from_str(&read(&dir.join("config.json"))).unwrap();
    serde_json::from_value(v["design"].clone()).unwrap()
}

#[test]
fn design_best_tool_resimulates_to_logged_fitness() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let root = tmp.path().join("out");
    run_ok(
        &["design", "--config", cfg.to_str().unwrap(), "--out", root.to_str().unwrap()],
        &[],
    );

    let dir = root.join("design");
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.join("summary.json"))).unwrap();
    let logged = summary["best_fitness"].as_f64().unwrap();
    let tool = ToolParams::from_json(&read(&dir.join("best_tool.json"))).unwrap();
    let design = design_from_snapshot(&dir);
    assert_eq!(tool_fitness(&tool.coeffs, &design), logged);

    let history = read(&dir.join("history.jsonl"));
    assert_eq!(history.lines().count(), design.optimizer.iterations);
    assert!(!read(&dir.join("best_tool.obj")).is_empty());
    assert!(read(&dir.join("rollout.csv")).lines().count() > 2);
    assert!(read(&dir.join("objective_per_step.csv")).starts_with("t,"));
}

#[test]
fn rerun_same_seed_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for root in [&a, &b] {
        run_ok(
            &["design", "--config", cfg.to_str().unwrap(), "--out", root.to_str().unwrap()],
            &[],
        );
    }
    for name in [
        "config.json",
        "history.jsonl",
        "best_tool.json",
        "best_tool.obj",
        "rollout.csv",
        "objective_per_step.csv",
        "summary.json",
    ] {
        assert_eq!(
            read(&a.join("design").join(name)),
            read(&b.join("design").join(name)),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn seed_flag_changes_the_search() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_ok(
        &["design", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()],
        &[],
    );
    run_ok(
        &[
            "design",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
            "--seed",
            "7",
        ],
        &[],
    );
    assert_ne!(
        read(&a.join("design/history.jsonl")),
        read(&b.join("design/history.jsonl"))
    );
}

#[test]
fn eval_report_matches_the_library_call() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let tool = ToolParams::new([0.0, 0.0, 0.0], 0.8, 0.2).unwrap();
    let tool_path = tmp.path().join("tool.json");
    std::fs::write(&tool_path, tool.to_json()).unwrap();
    let root = tmp.path().join("out");
    run_ok(
        &[
            "eval",
            "--config",
            cfg.to_str().unwrap(),
            "--tool",
            tool_path.to_str().unwrap(),
            "--out",
            root.to_str().unwrap(),
        ],
        &[],
    );

    let dir = root.join("eval");
    let report: RobustnessReport = serde_json::from_str(&read(&dir.join("report.json"))).unwrap();
    let design = design_from_snapshot(&dir);
    let perturbation = PerturbationSpec::new(0.1, vec![0.3, 0.5]).unwrap();
    let expected = evaluate_robustness(
        &tool,
        &design.plan,
        &design.world,
        &perturbation,
        design.density,
        design.max_spacing,
    );
    assert_eq!(report, expected);

    // All trajectory CSVs cover the same plan, so step counts match.
    let nominal = read(&dir.join("trajectory_nominal.csv")).lines().count();
    for m in ["0.3", "0.5"] {
        let rows = read(&dir.join(format!("trajectory_m{m}.csv"))).lines().count();
        assert_eq!(rows, nominal);
    }
}

#[test]
fn eval_with_no_perturbed_masses_scores_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("config.json");
    std::fs::write(
        &cfg_path,
        r#"{"design": {"max_spacing": 0.02}, "perturbation": {"perturbed_masses": []}}"#,
    )
    .unwrap();
    let tool = ToolParams::new([0.0, 0.0, 0.0], 0.8, 0.2).unwrap();
    let tool_path = tmp.path().join("tool.json");
    std::fs::write(&tool_path, tool.to_json()).unwrap();
    let root = tmp.path().join("out");
    run_ok(
        &[
            "eval",
            "--config",
            cfg_path.to_str().unwrap(),
            "--tool",
            tool_path.to_str().unwrap(),
            "--out",
            root.to_str().unwrap(),
        ],
        &[],
    );
    let report: RobustnessReport =
        serde_json::from_str(&read(&root.join("eval/report.json"))).unwrap();
    assert_eq!(report.robustness, 0.0);
    assert_eq!(report.accuracy, 0.0);
    assert_eq!(report.control_deviation, 0.0);
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let root = tmp.path().join("out");
    run_ok(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--px",
            "0,50",
            "--repeats",
            "2",
            "--out",
            root.to_str().unwrap(),
        ],
        &[],
    );
    let csv = read(&root.join("sweep/sweep.csv"));
    assert_eq!(csv.lines().count(), 1 + 2 * 2);

    let single = tmp.path().join("single");
    run_ok(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--px",
            "20",
            "--repeats",
            "1",
            "--out",
            single.to_str().unwrap(),
        ],
        &[],
    );
    let csv = read(&single.join("sweep/sweep.csv"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn benchmark_single_trial_curve_equals_design_history() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let root = tmp.path().join("out");
    run_ok(
        &[
            "benchmark",
            "--config",
            cfg.to_str().unwrap(),
            "--optimizers",
            "cmaes",
            "--trials",
            "1",
            "--out",
            root.to_str().unwrap(),
        ],
        &[],
    );
    // The small config keeps the default p_x = 20, the benchmark objective,
    // so a plain design run with the same seed walks the same history.
    run_ok(
        &["design", "--config", cfg.to_str().unwrap(), "--out", root.to_str().unwrap()],
        &[],
    );

    let history: Vec<f64> = read(&root.join("design/history.jsonl"))
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["best_fitness"].as_f64().unwrap()
        })
        .collect();
    let curve = read(&root.join("benchmark/benchmark.csv"));
    let mut rows = curve.lines().skip(1);
    for (it, best) in history.iter().enumerate() {
        let row = rows.next().expect("curve row");
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[0], "cmaes");
        assert_eq!(cols[1], (it + 1).to_string());
        assert_eq!(cols[2].parse::<f64>().unwrap(), *best);
        assert_eq!(cols[3].parse::<f64>().unwrap(), 0.0);
    }
    assert!(rows.next().is_none());
}

#[test]
fn simulate_defaults_to_a_straight_tool_and_export_mesh_welds_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let root = tmp.path().join("out");
    run_ok(
        &["simulate", "--config", cfg.to_str().unwrap(), "--out", root.to_str().unwrap()],
        &[],
    );
    let rollout = read(&root.join("simulate/rollout.csv"));
    assert!(rollout.starts_with("t,x,y,"));

    let tool = ToolParams::new([0.0, 0.0, 0.0], 0.8, 0.2).unwrap();
    let tool_path = tmp.path().join("tool.json");
    std::fs::write(&tool_path, tool.to_json()).unwrap();
    run_ok(
        &[
            "export-mesh",
            "--config",
            cfg.to_str().unwrap(),
            "--tool",
            tool_path.to_str().unwrap(),
            "--out",
            root.to_str().unwrap(),
        ],
        &[],
    );
    let (vertices, faces) = parse_obj::<f64>(&read(&root.join("export-mesh/mesh.obj"))).unwrap();
    assert_eq!(vertices.len(), 8, "straight ribbon welds to a box");
    assert!(!faces.is_empty());
}

#[test]
fn env_variable_overrides_the_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_small_config(tmp.path());
    let env_root = tmp.path().join("from-env");
    let mut cmd = bin();
    cmd.current_dir(tmp.path());
    cmd.args(["simulate", "--config", cfg.to_str().unwrap()]);
    cmd.env("HOOKSMITH_OUT", env_root.to_str().unwrap());
    let out = cmd.output().unwrap();
    assert!(out.status.success());
    assert!(env_root.join("simulate/rollout.csv").exists());
}

#[test]
fn config_problems_exit_with_2_and_io_failures_with_3() {
    let tmp = tempfile::tempdir().unwrap();

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(exit_code(&["design", "--config", bad.to_str().unwrap()]), 2);

    let invalid = tmp.path().join("invalid.json");
    std::fs::write(&invalid, r#"{"design": {"optimizer": {"population": 1}}}"#).unwrap();
    assert_eq!(exit_code(&["design", "--config", invalid.to_str().unwrap()]), 2);

    let missing_tool = tmp.path().join("nope.json");
    assert_eq!(
        exit_code(&["eval", "--tool", missing_tool.to_str().unwrap()]),
        2
    );

    assert_eq!(exit_code(&["benchmark", "--optimizers", "warp", "--trials", "1"]), 2);

    // A file where a directory must go makes artifact creation fail.
    let cfg = write_small_config(tmp.path());
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "file").unwrap();
    let out_under_file = blocker.join("sub");
    assert_eq!(
        exit_code(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_under_file.to_str().unwrap(),
        ]),
        3
    );
}
