//! Declarative run configuration: one JSON file covering the whole
//! pipeline. Defaults fill every omitted field, so `{}` is a valid
//! config. A few flags and one environment variable override it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hooksmith::geometry::ToolParams;
use hooksmith::sim::PlanSpec;
use hooksmith::{DesignConfig, PerturbationSpec};

use crate::error::CliError;

/// Environment variable overriding the output root. Resolution order:
/// `--out` flag, then this variable, then `output_dir` from the config.
pub const OUT_ENV: &str = "HOOKSMITH_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub design: DesignConfig,
    pub perturbation: PerturbationSpec,
    /// Output root; each command writes into `<output_dir>/<command>`.
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            design: DesignConfig::default(),
            perturbation: PerturbationSpec::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("parsing {}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Re-runs the invariant checks that deserialization bypasses.
    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.design;
        PlanSpec::new(d.plan.waypoints.clone(), d.plan.speed, d.plan.yaw)
            .map_err(CliError::config)?;
        d.world.validate().map_err(CliError::config)?;
        d.optimizer.validate().map_err(CliError::config)?;
        if d.optimizer.dim() != 3 {
            return Err(CliError::Config(
                "optimizer bounds must cover exactly the 3 tool coefficients".into(),
            ));
        }
        ToolParams::new([0.0; 3], d.tool_arc_length, d.tool_grasp_length)
            .map_err(CliError::config)?;
        if !(d.density.is_finite() && d.density > 0.0) {
            return Err(CliError::Config("density must be finite and positive".into()));
        }
        if !(d.max_spacing.is_finite() && d.max_spacing > 0.0) {
            return Err(CliError::Config(
                "max_spacing must be finite and positive".into(),
            ));
        }
        PerturbationSpec::new(
            self.perturbation.nominal_mass,
            self.perturbation.perturbed_masses.clone(),
        )
        .map_err(CliError::config)?;
        Ok(())
    }

    /// Serialized snapshot written into every artifact directory.
    pub fn snapshot_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

/// Output root after flag and environment overrides.
pub fn resolve_out_root(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(v) = std::env::var(OUT_ENV) {
        if !v.is_empty() {
            return PathBuf::from(v);
        }
    }
    cfg.output_dir.clone()
}

pub fn load_tool(path: &Path) -> Result<ToolParams<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading tool {}: {e}", path.display())))?;
    ToolParams::from_json(&text)
        .map_err(|e| CliError::Config(format!("tool {}: {e}", path.display())))
}
