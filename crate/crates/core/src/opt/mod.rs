//! Gradient-free minimizers over a bounded box of design coefficients:
//! CMA-ES (the primary designer), plus particle-swarm, random-sampling, and
//! Gaussian-process baselines for benchmarking. All four share the
//! [`OptRun`] schema and evaluate fitness through one memoized
//! [`FitnessGateway`], so evaluation budgets are comparable across
//! optimizers and the unique-call counter reflects actual simulator work.

pub mod bo;
pub mod cmaes;
pub mod pso;
pub mod random;

use std::collections::HashMap;

use rand::distributions::uniform::SampleRange;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub use bo::bo_minimize;
pub use cmaes::cmaes_minimize;
pub use pso::pso_minimize;
pub use random::random_search;

#[derive(Debug, Error)]
pub enum OptError {
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error("GP kernel matrix singular after jitter escalation")]
    GpSolveFailed,
}

/// Particle-swarm coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "R: Real")]
pub struct PsoParams<R> {
    pub inertia: R,
    pub cognitive: R,
    pub social: R,
}

impl<R: Real> Default for PsoParams<R> {
    fn default() -> Self {
        Self {
            inertia: R::of(0.7),
            cognitive: R::of(1.5),
            social: R::of(1.5),
        }
    }
}

/// Gaussian-process / expected-improvement knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "R: Real")]
pub struct BoParams<R> {
    pub length_scale: R,
    pub noise: R,
    pub candidate_pool: usize,
}

impl<R: Real> Default for BoParams<R> {
    fn default() -> Self {
        Self {
            length_scale: R::one(),
            noise: R::of(1e-2),
            candidate_pool: 1024,
        }
    }
}

/// Shared optimizer configuration. The search dimension is
/// `bounds.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "R: Real")]
pub struct OptimizerConfig<R> {
    /// Population (or evaluations per recorded iteration).
    pub population: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Per-dimension closed intervals.
    pub bounds: Vec<(R, R)>,
    /// Initial step scale for CMA-ES.
    pub sigma0: R,
    /// Initial mean for CMA-ES; all zeros by default.
    pub mean0: Vec<R>,
    pub pso: PsoParams<R>,
    pub bo: BoParams<R>,
}

impl<R: Real> Default for OptimizerConfig<R> {
    fn default() -> Self {
        Self {
            population: 12,
            iterations: 15,
            seed: 0,
            bounds: vec![(R::of(-5.0), R::of(5.0)); 3],
            sigma0: R::half(),
            mean0: vec![R::zero(); 3],
            pso: PsoParams::default(),
            bo: BoParams::default(),
        }
    }
}

impl<R: Real> OptimizerConfig<R> {
    pub fn validate(&self) -> Result<(), OptError> {
        if self.population < 2 {
            return Err(OptError::InvalidConfig("population must be >= 2".into()));
        }
        if self.iterations < 1 {
            return Err(OptError::InvalidConfig("iterations must be >= 1".into()));
        }
        if self.bounds.is_empty() {
            return Err(OptError::InvalidConfig("bounds must be non-empty".into()));
        }
        for (lo, hi) in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(OptError::InvalidConfig(
                    "each bound must be a non-empty finite interval".into(),
                ));
            }
        }
        if self.mean0.len() != self.bounds.len() {
            return Err(OptError::InvalidConfig(
                "mean0 dimension must match bounds".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Total evaluation budget all optimizers share.
    pub fn budget(&self) -> usize {
        self.population * self.iterations
    }

    pub(crate) fn clamp_point(&self, x: &mut [R]) {
        for (xi, (lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *xi = (*xi).max(*lo).min(*hi);
        }
    }

    pub(crate) fn in_bounds(&self, x: &[R]) -> bool {
        x.iter()
            .zip(&self.bounds)
            .all(|(xi, (lo, hi))| *xi >= *lo && *xi <= *hi)
    }

    pub(crate) fn sample_uniform<G: Rng>(&self, rng: &mut G) -> Vec<R> {
        self.bounds
            .iter()
            .map(|(lo, hi)| (*lo..=*hi).sample_single(rng))
            .collect()
    }
}

/// One recorded iteration: best-so-far plus population fitness statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord<R> {
    pub iter: usize,
    pub best_fitness: R,
    pub best_point: Vec<R>,
    /// Mean fitness of this iteration's evaluations.
    pub pop_mean: R,
    /// Population standard deviation of this iteration's evaluations.
    pub pop_std: R,
    /// Cumulative fitness requests after this iteration.
    pub evals: usize,
}

/// Result of one optimizer run. `evals` counts fitness requests (the
/// budget currency shared by every optimizer); `unique_evals` counts the
/// distinct points behind them, i.e. actual simulator calls after
/// memoization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptRun<R> {
    pub history: Vec<IterRecord<R>>,
    pub best_point: Vec<R>,
    pub best_fitness: R,
    pub evals: usize,
    pub unique_evals: usize,
}

impl<R: Real> OptRun<R> {
    /// One JSON object per iteration, newline separated.
    pub fn history_jsonl(&self) -> String {
        let mut out = String::new();
        for rec in &self.history {
            let coeffs: Vec<f64> = rec.best_point.iter().map(|c| c.to_f64().unwrap()).collect();
            let line = serde_json::json!({
                "iter": rec.iter,
                "best_fitness": rec.best_fitness.to_f64().unwrap(),
                "best_coeffs": coeffs,
                "pop_mean": rec.pop_mean.to_f64().unwrap(),
                "pop_std": rec.pop_std.to_f64().unwrap(),
                "evals": rec.evals,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Memoizing fitness funnel. Every optimizer draws evaluations through
/// this type: `requests` is the budget spent, `unique` the underlying
/// function calls (cache keys are the exact bit patterns of the point).
pub struct FitnessGateway<'a, R> {
    f: Box<dyn FnMut(&[R]) -> R + 'a>,
    cache: HashMap<Vec<u64>, R>,
    requests: usize,
    unique: usize,
}

impl<'a, R: Real> FitnessGateway<'a, R> {
    pub fn new(f: impl FnMut(&[R]) -> R + 'a) -> Self {
        Self {
            f: Box::new(f),
            cache: HashMap::new(),
            requests: 0,
            unique: 0,
        }
    }

    pub fn eval(&mut self, x: &[R]) -> R {
        self.requests += 1;
        let key: Vec<u64> = x.iter().map(|v| v.to_f64().unwrap().to_bits()).collect();
        if let Some(v) = self.cache.get(&key) {
            return *v;
        }
        let v = (self.f)(x);
        self.unique += 1;
        self.cache.insert(key, v);
        v
    }

    pub fn requests(&self) -> usize {
        self.requests
    }

    pub fn unique_evals(&self) -> usize {
        self.unique
    }
}

/// Population fitness statistics: mean and (population) standard
/// deviation.
pub(crate) fn pop_stats<R: Real>(fs: &[R]) -> (R, R) {
    let n = R::from_usize(fs.len()).unwrap();
    let mean = fs.iter().fold(R::zero(), |a, b| a + *b) / n;
    let var = fs
        .iter()
        .fold(R::zero(), |a, b| a + (*b - mean) * (*b - mean))
        / n;
    (mean, var.sqrt())
}

/// Tracks the best-so-far candidate; ties keep the earlier point so the
/// series is reproducible.
pub(crate) struct BestTracker<R> {
    pub point: Vec<R>,
    pub fitness: R,
}

impl<R: Real> BestTracker<R> {
    pub fn new(dim: usize) -> Self {
        Self {
            point: vec![R::zero(); dim],
            fitness: R::infinity(),
        }
    }

    pub fn observe(&mut self, point: &[R], fitness: R) {
        if fitness < self.fitness {
            self.fitness = fitness;
            self.point = point.to_vec();
        }
    }
}
