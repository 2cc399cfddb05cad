//! End-to-end design loop: optimizer candidates are polynomial coefficient
//! triples; each is built into a tool, run through the simulator on the
//! fixed plan, and scored by the free-energy objective. Candidates whose
//! geometry cannot be built receive a large penalty instead of an error so
//! every optimizer sees a total fitness function.

use serde::{Deserialize, Serialize};

use crate::geometry::{build_shape, ToolParams};
use crate::objective::{free_energy, FitnessReport, ObjectiveConfig};
use crate::opt::{
    bo_minimize, cmaes_minimize, pso_minimize, random_search, OptRun, OptimizerConfig,
};
use crate::scalar::Real;
use crate::sim::{simulate, PlanSpec, Rollout, WorldConfig};

/// Fitness assigned to candidates that fail to produce a simulatable tool.
pub const PENALTY_FITNESS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    CmaEs,
    Pso,
    RandomSearch,
    Bo,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::CmaEs => "cmaes",
            Algorithm::Pso => "pso",
            Algorithm::RandomSearch => "random",
            Algorithm::Bo => "bo",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cmaes" | "cma-es" | "cma" => Ok(Algorithm::CmaEs),
            "pso" => Ok(Algorithm::Pso),
            "random" | "rs" | "random-search" => Ok(Algorithm::RandomSearch),
            "bo" | "bayesian" => Ok(Algorithm::Bo),
            other => Err(format!("unknown algorithm: {other}")),
        }
    }
}

/// Everything one design run needs. `objective.goal` drives the fitness;
/// `world.goal` is carried along for evaluation consumers — use
/// [`DesignConfig::with_goal`] to keep them aligned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "R: Real")]
pub struct DesignConfig<R> {
    /// Arc length of the curved tool part, meters.
    pub tool_arc_length: R,
    /// Grasp segment length, meters.
    pub tool_grasp_length: R,
    /// Linear density of the tool rod, kg/m.
    pub density: R,
    /// Polyline sampling bound, meters.
    pub max_spacing: R,
    pub plan: PlanSpec<R>,
    pub world: WorldConfig<R>,
    pub objective: ObjectiveConfig<R>,
    pub optimizer: OptimizerConfig<R>,
    pub algorithm: Algorithm,
}

impl<R: Real> Default for DesignConfig<R> {
    fn default() -> Self {
        Self {
            tool_arc_length: R::of(0.8),
            tool_grasp_length: R::of(0.2),
            density: R::one(),
            max_spacing: R::of(0.005),
            plan: PlanSpec::default_plan(),
            world: WorldConfig::default(),
            objective: ObjectiveConfig::default(),
            optimizer: OptimizerConfig::default(),
            algorithm: Algorithm::CmaEs,
        }
    }
}

impl<R: Real> DesignConfig<R> {
    /// Sets the goal for both the objective and the world in one step.
    pub fn with_goal(mut self, goal: crate::linalg::Vec2<R>) -> Self {
        self.objective.goal = goal;
        self.world.goal = goal;
        self
    }
}

/// Total fitness over the coefficient box: free energy of the candidate's
/// rollout, or the penalty when geometry or scoring fails.
pub fn tool_fitness<R: Real>(point: &[R], cfg: &DesignConfig<R>) -> R {
    let penalty = R::of(PENALTY_FITNESS);
    let params = match ToolParams::new(
        [point[0], point[1], point[2]],
        cfg.tool_arc_length,
        cfg.tool_grasp_length,
    ) {
        Ok(p) => p,
        Err(_) => return penalty,
    };
    let shape = match build_shape(&params, cfg.density, cfg.max_spacing) {
        Ok(s) => s,
        Err(_) => return penalty,
    };
    let rollout = simulate(&shape, &cfg.plan, &cfg.world);
    match free_energy(&rollout, &cfg.objective) {
        Ok(rep) => rep.free_energy,
        Err(_) => penalty,
    }
}

/// A finished design run: the raw optimizer trace plus the re-simulated
/// best tool and its fitness decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRun<R> {
    pub opt: OptRun<R>,
    pub best_tool: ToolParams<R>,
    pub best_rollout: Rollout<R>,
    pub best_report: FitnessReport<R>,
}

pub fn run_design<R: Real>(cfg: &DesignConfig<R>) -> DesignRun<R> {
    let fitness = |x: &[R]| tool_fitness(x, cfg);
    let opt = match cfg.algorithm {
        Algorithm::CmaEs => cmaes_minimize(fitness, &cfg.optimizer),
        Algorithm::Pso => pso_minimize(fitness, &cfg.optimizer),
        Algorithm::RandomSearch => random_search(fitness, &cfg.optimizer),
        Algorithm::Bo => bo_minimize(fitness, &cfg.optimizer),
    };

    // Bounded finite coefficients always build: the arc-length integrand is
    // at least 1, so the domain solve cannot escape its bracket.
    let best_tool = ToolParams::new(
        [opt.best_point[0], opt.best_point[1], opt.best_point[2]],
        cfg.tool_arc_length,
        cfg.tool_grasp_length,
    )
    .expect("in-bounds candidate must be a valid tool");
    let shape = build_shape(&best_tool, cfg.density, cfg.max_spacing)
        .expect("in-bounds candidate must build");
    let best_rollout = simulate(&shape, &cfg.plan, &cfg.world);
    let best_report = free_energy(&best_rollout, &cfg.objective).expect("rollout is long enough");

    DesignRun {
        opt,
        best_tool,
        best_rollout,
        best_report,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> DesignConfig<f64> {
        let mut cfg = DesignConfig::<f64>::default();
        cfg.optimizer.population = 4;
        cfg.optimizer.iterations = 2;
        cfg.optimizer.seed = seed;
        cfg.max_spacing = 0.01;
        cfg
    }

    #[test]
    fn invalid_candidates_get_the_penalty() {
        let cfg = small_cfg(0);
        let f = tool_fitness(&[f64::NAN, 0.0, 0.0], &cfg);
        assert_eq!(f, PENALTY_FITNESS);
    }

    #[test]
    fn best_tool_resimulates_to_logged_fitness() {
        let cfg = small_cfg(5);
        let run = run_design(&cfg);
        assert!(run.best_report.free_energy.is_finite());
        assert_eq!(
            run.best_report.free_energy, run.opt.best_fitness,
            "re-simulated fitness must equal the logged best exactly"
        );
    }

    #[test]
    fn design_is_deterministic() {
        let cfg = small_cfg(9);
        let a = run_design(&cfg);
        let b = run_design(&cfg);
        assert_eq!(a.opt, b.opt);
        assert_eq!(a.best_tool, b.best_tool);
    }

    #[test]
    fn every_algorithm_dispatches() {
        for alg in [
            Algorithm::CmaEs,
            Algorithm::Pso,
            Algorithm::RandomSearch,
            Algorithm::Bo,
        ] {
            let mut cfg = small_cfg(1);
            cfg.algorithm = alg;
            let run = run_design(&cfg);
            assert_eq!(run.opt.evals, 8, "{}", alg.name());
            assert!(run.opt.best_fitness.is_finite());
        }
    }

    #[test]
    fn algorithm_names_round_trip() {
        for alg in [
            Algorithm::CmaEs,
            Algorithm::Pso,
            Algorithm::RandomSearch,
            Algorithm::Bo,
        ] {
            let parsed: Algorithm = alg.name().parse().unwrap();
            assert_eq!(parsed, alg);
        }
        assert!("nope".parse::<Algorithm>().is_err());
    }
}
