//! Uniform random sampling over the bounded box, `population` draws per
//! recorded iteration, tracking the best so far.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

use super::{pop_stats, BestTracker, FitnessGateway, IterRecord, OptRun, OptimizerConfig};

pub fn random_search<R: Real>(f: impl FnMut(&[R]) -> R, cfg: &OptimizerConfig<R>) -> OptRun<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gateway = FitnessGateway::new(f);
    let mut best = BestTracker::new(cfg.dim());
    let mut history = Vec::with_capacity(cfg.iterations);

    for iter in 0..cfg.iterations {
        let xs: Vec<Vec<R>> = (0..cfg.population)
            .map(|_| cfg.sample_uniform(&mut rng))
            .collect();
        let fs: Vec<R> = xs.iter().map(|x| gateway.eval(x)).collect();
        for (x, fit) in xs.iter().zip(&fs) {
            best.observe(x, *fit);
        }
        let (pop_mean, pop_std) = pop_stats(&fs);
        history.push(IterRecord {
            iter: iter + 1,
            best_fitness: best.fitness,
            best_point: best.point.clone(),
            pop_mean,
            pop_std,
            evals: gateway.requests(),
        });
    }

    OptRun {
        best_point: best.point.clone(),
        best_fitness: best.fitness,
        evals: gateway.requests(),
        unique_evals: gateway.unique_evals(),
        history,
    }
}
