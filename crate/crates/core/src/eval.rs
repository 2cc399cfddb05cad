//! Robustness evaluation: re-run a designed tool with perturbed box masses
//! and score how far the trajectories, goal distances, and control demands
//! drift from the nominal-mass run. Also hosts the comparative study that
//! sweeps goal-pressure variants over sampled goals and seeds.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{run_design, DesignConfig};
use crate::geometry::{build_shape, turning_angle, ToolParams};
use crate::linalg::Vec2;
use crate::scalar::Real;
use crate::sim::{simulate, PlanSpec, WorldConfig};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid perturbation masses: {0}")]
    InvalidMasses(String),
}

/// Nominal box mass plus the perturbed masses to test against. The nominal
/// mass may legitimately appear in the perturbed list; its deviation terms
/// are then exactly zero. `squared_error` switches the three metrics from
/// plain Euclidean distances to squared distances; it is off by default
/// and not used by the comparative study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "R: Real")]
pub struct PerturbationSpec<R> {
    pub nominal_mass: R,
    pub perturbed_masses: Vec<R>,
    pub squared_error: bool,
}

impl<R: Real> PerturbationSpec<R> {
    pub fn new(nominal_mass: R, perturbed_masses: Vec<R>) -> Result<Self, EvalError> {
        if !(nominal_mass.is_finite() && nominal_mass > R::zero()) {
            return Err(EvalError::InvalidMasses(
                "nominal mass must be finite and positive".into(),
            ));
        }
        if perturbed_masses
            .iter()
            .any(|m| !(m.is_finite() && *m > R::zero()))
        {
            return Err(EvalError::InvalidMasses(
                "perturbed masses must be finite and positive".into(),
            ));
        }
        Ok(Self {
            nominal_mass,
            perturbed_masses,
            squared_error: false,
        })
    }
}

impl<R: Real> Default for PerturbationSpec<R> {
    fn default() -> Self {
        Self {
            nominal_mass: R::of(0.1),
            perturbed_masses: vec![R::of(0.3), R::of(0.5), R::of(0.7), R::of(0.9)],
            squared_error: false,
        }
    }
}

/// Deviation terms contributed by a single perturbed mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassOutcome<R> {
    pub mass: R,
    pub robustness: R,
    pub accuracy: R,
    pub control_deviation: R,
}

/// Summed metrics over all perturbed masses. Robustness and accuracy are
/// negated distances (higher is better, zero is perfect); control deviation
/// is a plain distance (lower is better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport<R> {
    pub robustness: R,
    pub accuracy: R,
    pub control_deviation: R,
    pub per_mass: Vec<MassOutcome<R>>,
}

/// Runs the nominal-mass rollout and one rollout per perturbed mass, then
/// accumulates per-step deviations in list order.
pub fn evaluate_robustness<R: Real>(
    tool: &ToolParams<R>,
    plan: &PlanSpec<R>,
    world: &WorldConfig<R>,
    spec: &PerturbationSpec<R>,
    density: R,
    max_spacing: R,
) -> RobustnessReport<R> {
    let shape = build_shape(tool, density, max_spacing).expect("validated tool must build");

    let mut nominal_world = world.clone();
    nominal_world.box_mass = spec.nominal_mass;
    let nominal = simulate(&shape, plan, &nominal_world);

    let mut per_mass = Vec::with_capacity(spec.perturbed_masses.len());
    let mut robustness = R::zero();
    let mut accuracy = R::zero();
    let mut control_deviation = R::zero();

    for &mass in &spec.perturbed_masses {
        let mut w = world.clone();
        w.box_mass = mass;
        let run = simulate(&shape, plan, &w);
        debug_assert_eq!(run.len(), nominal.len());

        let mut rob = R::zero();
        let mut acc = R::zero();
        let mut dev = R::zero();
        for t in 0..run.len() {
            let dx = run.x[t] - nominal.x[t];
            let dg = run.x[t] - world.goal;
            let du = run.u[t] - nominal.u[t];
            if spec.squared_error {
                rob -= dx.norm_sq();
                acc -= dg.norm_sq();
                dev += du.norm_sq();
            } else {
                rob -= dx.norm();
                acc -= dg.norm();
                dev += du.norm();
            }
        }
        robustness += rob;
        accuracy += acc;
        control_deviation += dev;
        per_mass.push(MassOutcome {
            mass,
            robustness: rob,
            accuracy: acc,
            control_deviation: dev,
        });
    }

    RobustnessReport {
        robustness,
        accuracy,
        control_deviation,
        per_mass,
    }
}

/// Uniform goals over x in [-0.5, 0.5], y in [0.5, 1.5].
pub fn sample_goals<R: Real>(n: usize, seed: u64) -> Vec<Vec2<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = rng.gen_range(-0.5..=0.5);
            let y = rng.gen_range(0.5..=1.5);
            Vec2::new(R::of(x), R::of(y))
        })
        .collect()
}

/// One design-and-evaluate cell of the study grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell<R> {
    pub p_x: R,
    pub goal: Vec2<R>,
    pub seed: u64,
    pub best_fitness: R,
    pub best_coeffs: [R; 3],
    pub turning_angle: R,
    pub report: RobustnessReport<R>,
}

/// Per-variant means over all goals and seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow<R> {
    pub p_x: R,
    pub robustness: R,
    pub accuracy: R,
    pub control_deviation: R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable<R> {
    pub rows: Vec<StudyRow<R>>,
    pub cells: Vec<StudyCell<R>>,
}

impl<R: Real> StudyTable<R> {
    pub fn table_csv(&self) -> String {
        let mut out = String::from("variant,robustness,accuracy,control_deviation\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                row.p_x, row.robustness, row.accuracy, row.control_deviation
            ));
        }
        out
    }

    pub fn results_json(&self) -> String
    where
        R: Serialize,
    {
        serde_json::to_string_pretty(self).expect("study serializes")
    }
}

/// Runs the full variant x goal x seed grid. Seeds are shared across
/// variants (cell seed = base seed + seed index) so variants differ only in
/// goal pressure.
pub fn comparative_study<R: Real>(
    base: &DesignConfig<R>,
    spec: &PerturbationSpec<R>,
    goals: &[Vec2<R>],
    px_variants: &[R],
    n_seeds: usize,
) -> StudyTable<R> {
    let mut cells = Vec::new();
    let mut rows = Vec::with_capacity(px_variants.len());

    for &p_x in px_variants {
        let mut rob_sum = R::zero();
        let mut acc_sum = R::zero();
        let mut dev_sum = R::zero();
        let mut count = 0usize;

        for &goal in goals {
            for s in 0..n_seeds {
                let mut cfg = base.clone().with_goal(goal);
                cfg.objective.p_x = p_x;
                cfg.optimizer.seed = base.optimizer.seed + s as u64;
                let run = run_design(&cfg);
                let report = evaluate_robustness(
                    &run.best_tool,
                    &cfg.plan,
                    &cfg.world,
                    spec,
                    cfg.density,
                    cfg.max_spacing,
                );
                let shape = build_shape(&run.best_tool, cfg.density, cfg.max_spacing)
                    .expect("best tool must build");
                rob_sum += report.robustness;
                acc_sum += report.accuracy;
                dev_sum += report.control_deviation;
                count += 1;
                cells.push(StudyCell {
                    p_x,
                    goal,
                    seed: cfg.optimizer.seed,
                    best_fitness: run.opt.best_fitness,
                    best_coeffs: run.best_tool.coeffs,
                    turning_angle: turning_angle(&shape),
                    report,
                });
            }
        }

        let n = R::of(count.max(1) as f64);
        rows.push(StudyRow {
            p_x,
            robustness: rob_sum / n,
            accuracy: acc_sum / n,
            control_deviation: dev_sum / n,
        });
    }

    StudyTable { rows, cells }
}
