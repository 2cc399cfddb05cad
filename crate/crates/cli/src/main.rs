//! Command-line orchestrator for the hooksmith pipeline. Every verb runs
//! from a declarative JSON config (all fields defaulted), writes its
//! artifacts under one directory, and is bit-reproducible given the same
//! config and seed. Exit codes: 0 success, 2 config error, 3 runtime
//! failure.

mod commands;
mod config;
mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use hooksmith::design::Algorithm;
use hooksmith::geometry::ToolParams;
use hooksmith::PerturbationSpec;

use commands::{
    cmd_benchmark, cmd_design, cmd_eval, cmd_export_mesh, cmd_simulate, cmd_sweep, command_dir,
};
use config::{load_tool, resolve_out_root, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "hooksmith", version, about = "Design and evaluate planar hook tools")]
struct Cli {
    /// JSON run config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output root; overrides HOOKSMITH_OUT and the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Optimizer seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimize a tool for the configured goal and persist the run.
    Design,
    /// Score a tool's robustness under box-mass perturbations.
    Eval {
        /// Tool parameters JSON (as written by design).
        #[arg(long)]
        tool: PathBuf,
        /// Perturbed masses override, kg.
        #[arg(long, value_delimiter = ',')]
        masses: Option<Vec<f64>>,
    },
    /// Design-and-evaluate grid over goal-pressure variants.
    Sweep {
        /// Goal-pressure variants to design for.
        #[arg(long, value_delimiter = ',', default_value = "0,20,50")]
        px: Vec<f64>,
        /// Designs per variant; seeds count up from the config seed.
        #[arg(long, default_value_t = 10)]
        repeats: usize,
    },
    /// Equal-budget optimizer comparison on the p_x = 20 objective.
    Benchmark {
        /// Optimizers to race.
        #[arg(long, value_delimiter = ',', default_value = "cmaes,pso,random,bo")]
        optimizers: Vec<String>,
        /// Runs per optimizer; seeds count up from the config seed.
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Roll out one tool and write the trajectory CSV.
    Simulate {
        /// Tool parameters JSON; a straight tool when omitted.
        #[arg(long)]
        tool: Option<PathBuf>,
    },
    /// Write a tool's extruded OBJ mesh.
    ExportMesh {
        /// Tool parameters JSON.
        #[arg(long)]
        tool: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.design.optimizer.seed = seed;
    }
    let root = resolve_out_root(&cfg, cli.out.as_deref());

    match cli.cmd {
        Cmd::Design => cmd_design(&cfg, &command_dir(&root, "design")),
        Cmd::Eval { tool, masses } => {
            if let Some(masses) = masses {
                let mut p = PerturbationSpec::new(cfg.perturbation.nominal_mass, masses)
                    .map_err(CliError::config)?;
                p.squared_error = cfg.perturbation.squared_error;
                cfg.perturbation = p;
            }
            let tool = load_tool(&tool)?;
            cmd_eval(&cfg, &tool, &command_dir(&root, "eval"))
        }
        Cmd::Sweep { px, repeats } => cmd_sweep(&cfg, &px, repeats, &command_dir(&root, "sweep")),
        Cmd::Benchmark { optimizers, trials } => {
            let algs: Vec<Algorithm> = optimizers
                .iter()
                .map(|s| s.parse().map_err(CliError::Config))
                .collect::<Result<_, _>>()?;
            cmd_benchmark(&cfg, &algs, trials, &command_dir(&root, "benchmark"))
        }
        Cmd::Simulate { tool } => {
            let tool = match tool {
                Some(path) => load_tool(&path)?,
                None => ToolParams::new(
                    [0.0; 3],
                    cfg.design.tool_arc_length,
                    cfg.design.tool_grasp_length,
                )
                .map_err(CliError::config)?,
            };
            cmd_simulate(&cfg, &tool, &command_dir(&root, "simulate"))
        }
        Cmd::ExportMesh { tool } => {
            let tool = load_tool(&tool)?;
            cmd_export_mesh(&cfg, &tool, &command_dir(&root, "export-mesh"))
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.code());
    }
}
