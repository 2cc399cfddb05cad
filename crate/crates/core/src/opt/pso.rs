//! Global-best particle swarm: inertia plus cognitive and social pulls,
//! velocities clamped to the bound width, positions clipped to the box.
//! Personal and global bests update synchronously after each sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

use super::{pop_stats, BestTracker, FitnessGateway, IterRecord, OptRun, OptimizerConfig};

pub fn pso_minimize<R: Real>(f: impl FnMut(&[R]) -> R, cfg: &OptimizerConfig<R>) -> OptRun<R> {
    let n = cfg.dim();
    let lambda = cfg.population;
    let widths: Vec<R> = cfg.bounds.iter().map(|(lo, hi)| *hi - *lo).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gateway = FitnessGateway::new(f);
    let mut best = BestTracker::new(n);
    let mut history = Vec::with_capacity(cfg.iterations);

    let mut xs: Vec<Vec<R>> = (0..lambda).map(|_| cfg.sample_uniform(&mut rng)).collect();
    let mut vs: Vec<Vec<R>> = vec![vec![R::zero(); n]; lambda];
    let mut pbest = xs.clone();
    let mut pbest_f: Vec<R> = vec![R::infinity(); lambda];

    for iter in 0..cfg.iterations {
        if iter > 0 {
            for i in 0..lambda {
                for d in 0..n {
                    let r1: R = rng.gen_range(R::zero()..R::one());
                    let r2: R = rng.gen_range(R::zero()..R::one());
                    let v = cfg.pso.inertia * vs[i][d]
                        + cfg.pso.cognitive * r1 * (pbest[i][d] - xs[i][d])
                        + cfg.pso.social * r2 * (best.point[d] - xs[i][d]);
                    vs[i][d] = v.max(-widths[d]).min(widths[d]);
                    xs[i][d] += vs[i][d];
                }
                cfg.clamp_point(&mut xs[i]);
            }
        }

        let fs: Vec<R> = xs.iter().map(|x| gateway.eval(x)).collect();
        for i in 0..lambda {
            if fs[i] < pbest_f[i] {
                pbest_f[i] = fs[i];
                pbest[i] = xs[i].clone();
            }
            best.observe(&xs[i], fs[i]);
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

#[cfg(test)]
mod tests {
    use super::super::test_support::{assert_best_monotone, sphere};
    use super::*;

    #[test]
    fn sphere_reaches_fine_tolerance() {
        let cfg = OptimizerConfig {
            iterations: 100,
            seed: 21,
            ..OptimizerConfig::<f64>::default()
        };
        let run = pso_minimize(|x| sphere(x), &cfg);
        assert!(run.best_fitness < 1e-4, "best {}", run.best_fitness);
        assert_eq!(run.evals, 1200);
        assert_best_monotone(&run);
    }

    #[test]
    fn single_inert_particle_stays_at_init() {
        // Degenerate swarm below the validated minimum population,
        // constructed directly: with zero inertia and zero pull
        // coefficients the particle never moves.
        let cfg = OptimizerConfig {
            population: 1,
            iterations: 5,
            seed: 4,
            pso: super::super::PsoParams {
                inertia: 0.0,
                cognitive: 0.0,
                social: 0.0,
            },
            ..OptimizerConfig::<f64>::default()
        };
        let run = pso_minimize(|x| sphere(x), &cfg);
        let first = &run.history[0];
        assert_eq!(run.best_point, first.best_point);
        for rec in &run.history {
            assert_eq!(rec.best_fitness, first.best_fitness);
        }
        // Every evaluation hit the same point: one unique call.
        assert_eq!(run.evals, 5);
        assert_eq!(run.unique_evals, 1);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let cfg = OptimizerConfig {
            iterations: 25,
            seed: 77,
            ..OptimizerConfig::<f64>::default()
        };
        let a = pso_minimize(|x| sphere(x), &cfg);
        let b = pso_minimize(|x| sphere(x), &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn positions_stay_inside_bounds() {
        let cfg = OptimizerConfig {
            population: 6,
            iterations: 30,
            seed: 9,
            bounds: vec![(-0.5, 0.25); 3],
            mean0: vec![0.0; 3],
            ..OptimizerConfig::<f64>::default()
        };
        let run = pso_minimize(|x| sphere(x), &cfg);
        assert!(cfg.in_bounds(&run.best_point));
        for rec in &run.history {
            assert!(cfg.in_bounds(&rec.best_point));
        }
    }
}
