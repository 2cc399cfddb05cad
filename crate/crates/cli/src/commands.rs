//! The six verbs. Every command writes its artifacts into a dedicated
//! directory containing the exact config that produced them; nothing
//! outside that directory is touched, and identical configs reproduce
//! identical bytes.

use std::path::{Path, PathBuf};

use serde::Serialize;

use hooksmith::design::{run_design, Algorithm};
use hooksmith::eval::evaluate_robustness;
use hooksmith::geometry::{build_shape, export_mesh, turning_angle, ToolParams, ToolShape};
use hooksmith::objective::internal_energy;
use hooksmith::sim::simulate;

use crate::config::RunConfig;
use crate::error::CliError;

/// Fabricated ribbon thickness, meters; matches the mesh examples.
const TOOL_THICKNESS: f64 = 0.02;
/// Extrusion height, meters.
const TOOL_HEIGHT: f64 = 0.02;

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display())))
}

fn shape_of(cfg: &RunConfig, tool: &ToolParams<f64>) -> Result<ToolShape<f64>, CliError> {
    build_shape(tool, cfg.design.density, cfg.design.max_spacing).map_err(CliError::runtime)
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct DesignSummary {
    best_fitness: f64,
    goal_error_total: f64,
    confidence_total: f64,
    evals: usize,
    unique_evals: usize,
    turning_angle: f64,
    best_coeffs: [f64; 3],
}

pub fn cmd_design(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    make_dir(dir)?;
    let run = run_design(&cfg.design);
    let shape = shape_of(cfg, &run.best_tool)?;

    write_file(&dir.join("config.json"), &cfg.snapshot_json())?;
    write_file(&dir.join("history.jsonl"), &run.opt.history_jsonl())?;
    write_file(&dir.join("best_tool.json"), &run.best_tool.to_json())?;
    let obj = export_mesh(&shape, TOOL_THICKNESS, TOOL_HEIGHT).map_err(CliError::runtime)?;
    write_file(&dir.join("best_tool.obj"), &obj)?;
    write_file(&dir.join("rollout.csv"), &run.best_rollout.to_csv())?;
    write_file(
        &dir.join("objective_per_step.csv"),
        &run.best_report.per_step_csv(cfg.design.world.dt),
    )?;
    let summary = DesignSummary {
        best_fitness: run.opt.best_fitness,
        goal_error_total: run.best_report.goal_error_total,
        confidence_total: run.best_report.confidence_total,
        evals: run.opt.evals,
        unique_evals: run.opt.unique_evals,
        turning_angle: turning_angle(&shape),
        best_coeffs: run.best_tool.coeffs,
    };
    write_file(&dir.join("summary.json"), &pretty_json(&summary))?;

    println!(
        "design: best fitness {} after {} evaluations ({} unique)",
        run.opt.best_fitness, run.opt.evals, run.opt.unique_evals
    );
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_eval(cfg: &RunConfig, tool: &ToolParams<f64>, dir: &Path) -> Result<(), CliError> {
    make_dir(dir)?;
    let shape = shape_of(cfg, tool)?;
    let report = evaluate_robustness(
        tool,
        &cfg.design.plan,
        &cfg.design.world,
        &cfg.perturbation,
        cfg.design.density,
        cfg.design.max_spacing,
    );

    write_file(&dir.join("config.json"), &cfg.snapshot_json())?;
    write_file(&dir.join("tool.json"), &tool.to_json())?;
    write_file(&dir.join("report.json"), &pretty_json(&report))?;

    let mut world = cfg.design.world.clone();
    world.box_mass = cfg.perturbation.nominal_mass;
    let nominal = simulate(&shape, &cfg.design.plan, &world);
    write_file(&dir.join("trajectory_nominal.csv"), &nominal.to_csv())?;
    for &m in &cfg.perturbation.perturbed_masses {
        let mut w = cfg.design.world.clone();
        w.box_mass = m;
        let run = simulate(&shape, &cfg.design.plan, &w);
        write_file(&dir.join(format!("trajectory_m{m}.csv")), &run.to_csv())?;
    }

    println!(
        "eval: robustness {}, accuracy {}, control deviation {}",
        report.robustness, report.accuracy, report.control_deviation
    );
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    px: &[f64],
    repeats: usize,
    dir: &Path,
) -> Result<(), CliError> {
    if px.is_empty() || repeats == 0 {
        return Err(CliError::Config(
            "sweep needs at least one p_x value and one repeat".into(),
        ));
    }
    make_dir(dir)?;

    let mut csv = String::from(
        "p_x,seed,best_fitness,goal_error,turning_angle,robustness,accuracy,control_deviation\n",
    );
    for &p in px {
        for r in 0..repeats {
            let mut d = cfg.design.clone();
            d.objective.p_x = p;
            d.optimizer.seed = cfg.design.optimizer.seed + r as u64;
            let run = run_design(&d);
            let shape = build_shape(&run.best_tool, d.density, d.max_spacing)
                .map_err(CliError::runtime)?;
            let report = evaluate_robustness(
                &run.best_tool,
                &d.plan,
                &d.world,
                &cfg.perturbation,
                d.density,
                d.max_spacing,
            );
            // Unweighted goal error of the nominal rollout, so designs
            // from different p_x variants stay comparable.
            let mut unit = d.objective;
            unit.p_x = 1.0;
            let goal_error: f64 = run
                .best_rollout
                .x
                .iter()
                .map(|x| internal_energy(*x, &unit))
                .sum();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                p,
                d.optimizer.seed,
                run.opt.best_fitness,
                goal_error,
                turning_angle(&shape),
                report.robustness,
                report.accuracy,
                report.control_deviation,
            ));
        }
    }

    write_file(&dir.join("config.json"), &cfg.snapshot_json())?;
    write_file(&dir.join("sweep.csv"), &csv)?;

    println!("sweep: {} designs over {} p_x variants", px.len() * repeats, px.len());
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_benchmark(
    cfg: &RunConfig,
    optimizers: &[Algorithm],
    trials: usize,
    dir: &Path,
) -> Result<(), CliError> {
    if optimizers.is_empty() || trials == 0 {
        return Err(CliError::Config(
            "benchmark needs at least one optimizer and one trial".into(),
        ));
    }
    make_dir(dir)?;

    // The benchmark objective is fixed at p_x = 20 regardless of the
    // configured design objective.
    let mut snapshot = cfg.clone();
    snapshot.design.objective.p_x = 20.0;

    let iterations = snapshot.design.optimizer.iterations;
    let mut curve_csv = String::from("optimizer,iter,mean_best_fitness,std_best_fitness\n");
    let mut trial_csv = String::from("optimizer,trial,seed,best_fitness,evals,unique_evals\n");
    let mut budgets: Vec<usize> = Vec::new();
    let mut finals: Vec<(Algorithm, f64)> = Vec::new();

    for &alg in optimizers {
        let mut histories = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut d = snapshot.design.clone();
            d.algorithm = alg;
            d.optimizer.seed = snapshot.design.optimizer.seed + t as u64;
            let run = run_design(&d);
            budgets.push(run.opt.evals);
            trial_csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                alg.name(),
                t,
                d.optimizer.seed,
                run.opt.best_fitness,
                run.opt.evals,
                run.opt.unique_evals,
            ));
            histories.push(run.opt.history);
        }
        for it in 0..iterations {
            let series: Vec<f64> = histories.iter().map(|h| h[it].best_fitness).collect();
            let mean = series.iter().sum::<f64>() / series.len() as f64;
            let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / series.len() as f64;
            curve_csv.push_str(&format!(
                "{},{},{},{}\n",
                alg.name(),
                it + 1,
                mean,
                var.sqrt()
            ));
            if it + 1 == iterations {
                finals.push((alg, mean));
            }
        }
    }

    if budgets.windows(2).any(|w| w[0] != w[1]) {
        return Err(CliError::Runtime(
            "optimizers spent unequal evaluation budgets".into(),
        ));
    }

    write_file(&dir.join("config.json"), &snapshot.snapshot_json())?;
    write_file(&dir.join("benchmark.csv"), &curve_csv)?;
    write_file(&dir.join("trials.csv"), &trial_csv)?;

    for (alg, mean) in &finals {
        println!("benchmark: {} final mean best fitness {}", alg.name(), mean);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_simulate(cfg: &RunConfig, tool: &ToolParams<f64>, dir: &Path) -> Result<(), CliError> {
    make_dir(dir)?;
    let shape = shape_of(cfg, tool)?;
    let rollout = simulate(&shape, &cfg.design.plan, &cfg.design.world);

    write_file(&dir.join("config.json"), &cfg.snapshot_json())?;
    write_file(&dir.join("tool.json"), &tool.to_json())?;
    write_file(&dir.join("rollout.csv"), &rollout.to_csv())?;

    let last = rollout.x[rollout.len() - 1];
    println!(
        "simulate: {} steps, final box position ({}, {})",
        rollout.len(),
        last.x,
        last.y
    );
    println!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_export_mesh(
    cfg: &RunConfig,
    tool: &ToolParams<f64>,
    dir: &Path,
) -> Result<(), CliError> {
    make_dir(dir)?;
    let shape = shape_of(cfg, tool)?;
    let obj = export_mesh(&shape, TOOL_THICKNESS, TOOL_HEIGHT).map_err(CliError::runtime)?;

    write_file(&dir.join("config.json"), &cfg.snapshot_json())?;
    write_file(&dir.join("tool.json"), &tool.to_json())?;
    write_file(&dir.join("mesh.obj"), &obj)?;

    let vertices = obj.lines().filter(|l| l.starts_with("v ")).count();
    println!("export-mesh: {vertices} vertices");
    println!("wrote {}", dir.display());
    Ok(())
}

/// `<out root>/<command>`, the per-command artifact directory.
pub fn command_dir(root: &Path, verb: &str) -> PathBuf {
    root.join(verb)
}
