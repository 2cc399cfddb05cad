//! (mu/mu_w, lambda) covariance matrix adaptation evolution strategy:
//! rank-based recombination, cumulative step-size adaptation, rank-one plus
//! rank-mu covariance update, with a symmetrize-and-floor repair after
//! every update. Out-of-bounds candidates are resampled up to 100 times,
//! then clipped.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::sym_eigen;
use crate::scalar::Real;

use super::{pop_stats, BestTracker, FitnessGateway, IterRecord, OptRun, OptimizerConfig};

/// Eigenvalue floor applied to the covariance after every update.
const COV_EIG_FLOOR: f64 = 1e-12;
const RESAMPLE_TRIES: usize = 100;

/// Symmetrizes `c`, floors its eigenvalues, writes the repaired matrix
/// back, and returns the eigenbasis and per-axis standard deviations used
/// for sampling.
pub(crate) fn repair_covariance<R: Real>(c: &mut [Vec<R>]) -> (Vec<Vec<R>>, Vec<R>) {
    let n = c.len();
    for i in 0..n {
        for j in i + 1..n {
            let s = (c[i][j] + c[j][i]) * R::half();
            c[i][j] = s;
            c[j][i] = s;
        }
    }
    let (mut vals, vecs) = sym_eigen(&c.to_vec());
    let floor = R::of(COV_EIG_FLOOR);
    for v in vals.iter_mut() {
        if !v.is_finite() || *v < floor {
            *v = floor;
        }
    }
    for i in 0..n {
        for j in 0..n {
            let mut s = R::zero();
            for (k, vk) in vals.iter().enumerate() {
                s += vecs[i][k] * *vk * vecs[j][k];
            }
            c[i][j] = s;
        }
    }
    // Exact symmetry after the reconstruction round-off.
    for i in 0..n {
        for j in i + 1..n {
            let s = (c[i][j] + c[j][i]) * R::half();
            c[i][j] = s;
            c[j][i] = s;
        }
    }
    let d = vals.iter().map(|v| v.sqrt()).collect();
    (vecs, d)
}

pub fn cmaes_minimize<R: Real>(f: impl FnMut(&[R]) -> R, cfg: &OptimizerConfig<R>) -> OptRun<R> {
    let n = cfg.dim();
    let lambda = cfg.population;
    let n_f = n as f64;
    let mu = lambda / 2;

    // Rank-based recombination weights.
    let mut w: Vec<f64> = (0..mu)
        .map(|i| (mu as f64 + 0.5).ln() - ((i + 1) as f64).ln())
        .collect();
    let wsum: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi /= wsum;
    }
    let mu_eff = 1.0 / w.iter().map(|wi| wi * wi).sum::<f64>();

    // Standard strategy parameters.
    let c_sigma = (mu_eff + 2.0) / (n_f + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n_f + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_eff / n_f) / (n_f + 4.0 + 2.0 * mu_eff / n_f);
    let c_1 = 2.0 / ((n_f + 1.3).powi(2) + mu_eff);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n_f + 2.0).powi(2) + mu_eff));
    let chi_n = n_f.sqrt() * (1.0 - 1.0 / (4.0 * n_f) + 1.0 / (21.0 * n_f * n_f));

    let w_r: Vec<R> = w.iter().map(|v| R::of(*v)).collect();
    let c_sigma_r = R::of(c_sigma);
    let c_c_r = R::of(c_c);
    let c_1_r = R::of(c_1);
    let c_mu_r = R::of(c_mu);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gateway = FitnessGateway::new(f);
    let mut best = BestTracker::new(n);

    let mut mean: Vec<R> = cfg.mean0.clone();
    let mut sigma = cfg.sigma0;
    let mut cov: Vec<Vec<R>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { R::one() } else { R::zero() })
                .collect()
        })
        .collect();
    let (mut basis, mut axis_sd) = repair_covariance(&mut cov);
    let mut p_sigma = vec![R::zero(); n];
    let mut p_c = vec![R::zero(); n];

    let mut history = Vec::with_capacity(cfg.iterations);

    for iter in 0..cfg.iterations {
        // Sample the population; resample out-of-bounds, then clip.
        let mut xs: Vec<Vec<R>> = Vec::with_capacity(lambda);
        for _ in 0..lambda {
            let mut x = vec![R::zero(); n];
            for _try in 0..RESAMPLE_TRIES {
                let z: Vec<R> = (0..n).map(|_| R::std_normal(&mut rng)).collect();
                for i in 0..n {
                    let mut yi = R::zero();
                    for k in 0..n {
                        yi += basis[i][k] * axis_sd[k] * z[k];
                    }
                    x[i] = mean[i] + sigma * yi;
                }
                if cfg.in_bounds(&x) {
                    break;
                }
            }
            cfg.clamp_point(&mut x);
            xs.push(x);
        }

        let fs: Vec<R> = xs.iter().map(|x| gateway.eval(x)).collect();
        for (x, fit) in xs.iter().zip(&fs) {
            best.observe(x, *fit);
        }

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| fs[a].partial_cmp(&fs[b]).unwrap_or(std::cmp::Ordering::Equal));

        // Recombination.
        let old_mean = mean.clone();
        for i in 0..n {
            let mut mi = R::zero();
            for (rank, wi) in w_r.iter().enumerate() {
                mi += *wi * xs[order[rank]][i];
            }
            mean[i] = mi;
        }
        let shift: Vec<R> = (0..n).map(|i| (mean[i] - old_mean[i]) / sigma).collect();

        // Step-size path uses the whitened mean shift.
        let mut whitened = vec![R::zero(); n];
        for i in 0..n {
            let mut s = R::zero();
            for k in 0..n {
                // C^{-1/2} = B diag(1/d) B^T
                s += basis[i][k] / axis_sd[k]
                    * (0..n)
                        .map(|j| basis[j][k] * shift[j])
                        .fold(R::zero(), |a, b| a + b);
            }
            whitened[i] = s;
        }
        let coef_s = (c_sigma_r * (R::two() - c_sigma_r) * R::of(mu_eff)).sqrt();
        for i in 0..n {
            p_sigma[i] = (R::one() - c_sigma_r) * p_sigma[i] + coef_s * whitened[i];
        }
        let ps_norm = p_sigma
            .iter()
            .fold(R::zero(), |a, b| a + *b * *b)
            .sqrt();

        let decay = 1.0 - (1.0 - c_sigma).powi(2 * (iter as i32 + 1));
        let h_sigma = ps_norm.to_f64().unwrap() / decay.sqrt()
            < (1.4 + 2.0 / (n_f + 1.0)) * chi_n;
        let h_r = if h_sigma { R::one() } else { R::zero() };

        let coef_c = (c_c_r * (R::two() - c_c_r) * R::of(mu_eff)).sqrt();
        for i in 0..n {
            p_c[i] = (R::one() - c_c_r) * p_c[i] + h_r * coef_c * shift[i];
        }

        // Rank-one + rank-mu covariance update.
        let stall = (R::one() - h_r) * c_c_r * (R::two() - c_c_r);
        let keep = R::one() - c_1_r - c_mu_r;
        for i in 0..n {
            for j in 0..n {
                let mut rank_mu = R::zero();
                for (rank, wi) in w_r.iter().enumerate() {
                    let yi = (xs[order[rank]][i] - old_mean[i]) / sigma;
                    let yj = (xs[order[rank]][j] - old_mean[j]) / sigma;
                    rank_mu += *wi * yi * yj;
                }
                cov[i][j] = keep * cov[i][j]
                    + c_1_r * (p_c[i] * p_c[j] + stall * cov[i][j])
                    + c_mu_r * rank_mu;
            }
        }
        let repaired = repair_covariance(&mut cov);
        basis = repaired.0;
        axis_sd = repaired.1;

        // Step-size adaptation, clamped away from numerical extremes.
        let ratio = ps_norm / R::of(chi_n);
        sigma = sigma * ((c_sigma_r / R::of(d_sigma)) * (ratio - R::one())).exp();
        sigma = sigma.max(R::of(1e-16)).min(R::of(1e16));

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
