//! Bayesian optimization: a squared-exponential Gaussian process with
//! fixed length-scale and noise fit to standardized fitness values, with
//! expected improvement maximized over a seeded random candidate pool.
//! Each step's pool is either uniform over the bounds (exploration) or
//! Gaussian around the incumbent (refinement) on a fixed schedule, with
//! the refinement scale annealed geometrically. Mixing both kinds into
//! one pool does not work: the fixed noise floors the posterior spread
//! near observed points, so an unexplored candidate at prior variance
//! out-scores every refinement candidate and the argmax explores
//! forever. A numerically singular kernel (after jitter escalation)
//! falls back to a uniform random proposal for that step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::cholesky;
use crate::scalar::Real;

use super::{
    pop_stats, BestTracker, BoParams, FitnessGateway, IterRecord, OptError, OptRun,
    OptimizerConfig,
};

/// Diagonal jitter escalation ladder tried before giving up on the kernel.
const JITTERS: [f64; 6] = [0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2];

/// Budget fraction spent on all-uniform exploration pools up front.
const EXPLORE_PHASE: f64 = 0.3;
/// During refinement, every this-many-th step still explores uniformly.
const EXPLORE_EVERY: usize = 5;
/// Refinement perturbation scale at the start of the refinement phase,
/// as a fraction of each bound width.
const LOCAL_SCALE_START: f64 = 0.05;
/// Refinement perturbation scale at the end of the budget. The geometric
/// anneal between the two lets proposals cross the resolution limit the
/// fixed GP noise imposes on expected-improvement ranking.
const LOCAL_SCALE_END: f64 = 1e-4;

/// Geometric interpolation of the refinement scale at `t` in [0, 1].
fn local_scale(t: f64) -> f64 {
    LOCAL_SCALE_START * (LOCAL_SCALE_END / LOCAL_SCALE_START).powf(t)
}

fn kernel<R: Real>(a: &[R], b: &[R], length_scale: R) -> R {
    let mut d2 = R::zero();
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        d2 += d * d;
    }
    (-d2 / (R::two() * length_scale * length_scale)).exp()
}

/// Cholesky with escalating diagonal jitter.
pub(crate) fn chol_with_jitter<R: Real>(k: &[Vec<R>]) -> Result<Vec<Vec<R>>, OptError> {
    let n = k.len();
    for jitter in JITTERS {
        let mut kj = k.to_vec();
        for (i, row) in kj.iter_mut().enumerate().take(n) {
            row[i] += R::of(jitter);
        }
        if let Some(l) = cholesky(&kj) {
            return Ok(l);
        }
    }
    Err(OptError::GpSolveFailed)
}

fn forward_solve<R: Real>(l: &[Vec<R>], b: &[R]) -> Vec<R> {
    let n = l.len();
    let mut y = vec![R::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    y
}

fn back_solve<R: Real>(l: &[Vec<R>], y: &[R]) -> Vec<R> {
    let n = l.len();
    let mut x = vec![R::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Gaussian-process posterior over standardized fitness.
pub(crate) struct Gp<R> {
    points: Vec<Vec<R>>,
    l: Vec<Vec<R>>,
    alpha: Vec<R>,
    /// Standardized observations.
    pub y: Vec<R>,
    length_scale: R,
}

pub(crate) fn fit_gp<R: Real>(
    points: &[Vec<R>],
    fs: &[R],
    params: &BoParams<R>,
) -> Result<Gp<R>, OptError> {
    let n = points.len();
    let (mean, std) = pop_stats(fs);
    let std = std.max(R::of(1e-12));
    let y: Vec<R> = fs.iter().map(|f| (*f - mean) / std).collect();

    let mut k = vec![vec![R::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            k[i][j] = kernel(&points[i], &points[j], params.length_scale);
        }
        k[i][i] += params.noise;
    }
    let l = chol_with_jitter(&k)?;
    let w = forward_solve(&l, &y);
    let alpha = back_solve(&l, &w);
    Ok(Gp {
        points: points.to_vec(),
        l,
        alpha,
        y,
        length_scale: params.length_scale,
    })
}

impl<R: Real> Gp<R> {
    /// Posterior mean and variance of the latent function at `x`.
    pub(crate) fn predict(&self, x: &[R]) -> (R, R) {
        let kvec: Vec<R> = self
            .points
            .iter()
            .map(|p| kernel(p, x, self.length_scale))
            .collect();
        let mu = kvec
            .iter()
            .zip(&self.alpha)
            .fold(R::zero(), |a, (k, al)| a + *k * *al);
        let w = forward_solve(&self.l, &kvec);
        let var = (R::one() - w.iter().fold(R::zero(), |a, b| a + *b * *b)).max(R::of(1e-12));
        (mu, var)
    }
}

/// Abramowitz-Stegun rational approximation of the error function.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn normal_cdf<R: Real>(z: R) -> R {
    R::of(0.5 * (1.0 + erf(z.to_f64().unwrap() / std::f64::consts::SQRT_2)))
}

fn normal_pdf<R: Real>(z: R) -> R {
    let z = z.to_f64().unwrap();
    R::of((-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt())
}

/// Expected improvement below `f_best` for a minimization posterior.
pub(crate) fn expected_improvement<R: Real>(mu: R, var: R, f_best: R) -> R {
    let sigma = var.sqrt().max(R::of(1e-12));
    let gap = f_best - mu;
    let z = gap / sigma;
    gap * normal_cdf(z) + sigma * normal_pdf(z)
}

/// EI argmax over this step's candidate pool; earliest index wins ties.
/// `step` out of `budget` drives the exploration/refinement schedule.
pub(crate) fn propose<R: Real, G: Rng>(
    gp: &Gp<R>,
    cfg: &OptimizerConfig<R>,
    incumbent: &[R],
    step: usize,
    budget: usize,
    rng: &mut G,
) -> Vec<R> {
    let pool = cfg.bo.candidate_pool.max(1);
    let f_best = gp.y.iter().fold(R::infinity(), |a, b| a.min(*b));

    let progress = step as f64 / budget.max(1) as f64;
    let exploring = progress < EXPLORE_PHASE || step % EXPLORE_EVERY == 0;
    let refine_t = ((progress - EXPLORE_PHASE) / (1.0 - EXPLORE_PHASE)).clamp(0.0, 1.0);
    let scale = R::of(local_scale(refine_t));

    let mut best_ei = R::neg_infinity();
    let mut best_x: Option<Vec<R>> = None;
    for _ in 0..pool {
        let x = if exploring {
            cfg.sample_uniform(rng)
        } else {
            let mut x: Vec<R> = incumbent
                .iter()
                .zip(&cfg.bounds)
                .map(|(xi, (lo, hi))| *xi + R::std_normal(rng) * scale * (*hi - *lo))
                .collect();
            cfg.clamp_point(&mut x);
            x
        };
        let (mu, var) = gp.predict(&x);
        let ei = expected_improvement(mu, var, f_best);
        if ei > best_ei {
            best_ei = ei;
            best_x = Some(x);
        }
    }
    best_x.expect("pool is non-empty")
}

pub fn bo_minimize<R: Real>(f: impl FnMut(&[R]) -> R, cfg: &OptimizerConfig<R>) -> OptRun<R> {
    let budget = cfg.budget();
    let lambda = cfg.population;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut gateway = FitnessGateway::new(f);
    let mut best = BestTracker::new(cfg.dim());
    let mut history = Vec::with_capacity(cfg.iterations);

    let mut points: Vec<Vec<R>> = Vec::with_capacity(budget);
    let mut fs: Vec<R> = Vec::with_capacity(budget);
    let mut chunk: Vec<R> = Vec::with_capacity(lambda);

    for step in 0..budget {
        let x = if step < lambda {
            cfg.sample_uniform(&mut rng)
        } else {
            match fit_gp(&points, &fs, &cfg.bo) {
                Ok(gp) => propose(&gp, cfg, &best.point, step, budget, &mut rng),
                // Singular kernel: keep the run alive with a random step.
                Err(OptError::GpSolveFailed) => cfg.sample_uniform(&mut rng),
                Err(_) => unreachable!("fit_gp only signals GpSolveFailed"),
            }
        };
        let fit = gateway.eval(&x);
        best.observe(&x, fit);
        points.push(x);
        fs.push(fit);
        chunk.push(fit);

        if chunk.len() == lambda {
            let (pop_mean, pop_std) = pop_stats(&chunk);
            history.push(IterRecord {
                iter: history.len() + 1,
                best_fitness: best.fitness,
                best_point: best.point.clone(),
                pop_mean,
                pop_std,
                evals: gateway.requests(),
            });
            chunk.clear();
        }
    }

    OptRun {
        best_point: best.point.clone(),
        best_fitness: best.fitness,
        evals: gateway.requests(),
        unique_evals: gateway.unique_evals(),
        history,
    }
}
