//! Fitness of a rollout: precision-weighted goal error plus a control
//! confidence term derived from numerical gradients of the recorded state
//! with respect to the recorded control wrench. Low fitness means the box
//! tracks the goal while the tool keeps responsive, high-sensitivity
//! contact with it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{sym_eigen_3x3, Mat3, Vec2, Vec3};
use crate::scalar::Real;
use crate::sim::Rollout;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("rollout too short for gradients: {len} steps, need at least 3")]
    RolloutTooShort { len: usize },
}

/// How state-control Jacobians are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Finite differences along a single recorded trajectory (default).
    Trajectory,
    /// Re-rolling a plant with perturbed controls; a validation oracle for
    /// synthetic plants, not applicable to the contact simulator whose
    /// control series is an output.
    Perturbation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "R: Real")]
pub struct ObjectiveConfig<R> {
    /// Goal-precision weight; the state precision matrix is `p_x * I`.
    pub p_x: R,
    /// Goal position, meters.
    pub goal: Vec2<R>,
    /// Denominator clamp for control differences.
    pub eps_u: R,
    /// Eigenvalue floor inside the stabilized log-determinant.
    pub lambda_reg: R,
    pub gradient_mode: GradientMode,
}

impl<R: Real> ObjectiveConfig<R> {
    pub fn new(p_x: R, goal: Vec2<R>) -> Self {
        Self {
            p_x,
            goal,
            eps_u: R::of(1e-3),
            lambda_reg: R::of(1e-6),
            gradient_mode: GradientMode::Trajectory,
        }
    }
}

impl<R: Real> Default for ObjectiveConfig<R> {
    fn default() -> Self {
        Self::new(R::of(20.0), Vec2::new(R::zero(), R::of(1.5)))
    }
}

/// Per-step gradient estimates: `j[k][i]` is the sensitivity of state
/// component `k` to control component `i`; `h` contracts the goal-weighted
/// second differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGradients<R> {
    pub t: usize,
    pub j: [[R; 3]; 2],
    pub h: Mat3<R>,
}

/// Fitness decomposition. `free_energy = goal_error_total +
/// confidence_total` by construction; the per-step series back the
/// decomposition export.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessReport<R> {
    pub goal_error_total: R,
    pub confidence_total: R,
    pub free_energy: R,
    /// Goal error per step, one entry per rollout step.
    pub e_per_step: Vec<R>,
    /// Stabilized log-determinant per step, starting at step 2 (the first
    /// two steps lack the differences gradients need).
    pub logdet_per_step: Vec<R>,
}

impl<R: Real> FitnessReport<R> {
    /// First step index covered by `logdet_per_step`.
    pub const LOGDET_START: usize = 2;

    /// CSV export `t,E,logdetPi,F_cum`; the log-det column is empty for
    /// the first two steps.
    pub fn per_step_csv(&self, dt: R) -> String {
        let mut out = String::from("t,E,logdetPi,F_cum\n");
        let mut cum = R::zero();
        for (k, e) in self.e_per_step.iter().enumerate() {
            cum += *e;
            let logdet = if k >= Self::LOGDET_START {
                self.logdet_per_step.get(k - Self::LOGDET_START)
            } else {
                None
            };
            let t = dt * R::from_usize(k).unwrap();
            match logdet {
                Some(ld) => {
                    cum += -R::half() * *ld;
                    out.push_str(&format!("{t},{e},{ld},{cum}\n"));
                }
                None => out.push_str(&format!("{t},{e},,{cum}\n")),
            }
        }
        out
    }
}

/// Precision-weighted squared goal error `0.5 * p_x * |x - goal|^2`.
pub fn internal_energy<R: Real>(x: Vec2<R>, cfg: &ObjectiveConfig<R>) -> R {
    R::half() * cfg.p_x * (x - cfg.goal).norm_sq()
}

/// Sign-preserving denominator clamp; zero clamps positive.
fn clamp_denom<R: Real>(u: R, eps: R) -> R {
    let mag = u.abs().max(eps);
    if u < R::zero() {
        -mag
    } else {
        mag
    }
}

/// Along-trajectory finite-difference gradients for steps `2..len`.
pub fn trajectory_gradients<R: Real>(
    rollout: &Rollout<R>,
    cfg: &ObjectiveConfig<R>,
) -> Result<Vec<StepGradients<R>>, ObjectiveError> {
    let n = rollout.len();
    if n < 3 {
        return Err(ObjectiveError::RolloutTooShort { len: n });
    }

    let jac_at = |t: usize| -> [[R; 3]; 2] {
        let dx = rollout.x[t] - rollout.x[t - 1];
        let du = rollout.u[t] - rollout.u[t - 1];
        let dxa = [dx.x, dx.y];
        let mut j = [[R::zero(); 3]; 2];
        for (k, dxk) in dxa.iter().enumerate() {
            for i in 0..3 {
                j[k][i] = *dxk / clamp_denom(du.get(i), cfg.eps_u);
            }
        }
        j
    };

    let mut out = Vec::with_capacity(n - 2);
    let mut j_prev = jac_at(1);
    for t in 2..n {
        let j_t = jac_at(t);
        let du = rollout.u[t] - rollout.u[t - 1];
        let w = rollout.x[t] - cfg.goal;
        let wa = [w.x, w.y];
        let mut h = Mat3::zero();
        for i in 0..3 {
            let mut contracted = R::zero();
            for (k, wk) in wa.iter().enumerate() {
                contracted += *wk * (j_t[k][i] - j_prev[k][i]);
            }
            for jj in 0..3 {
                h.m[i][jj] = contracted / clamp_denom(du.get(jj), cfg.eps_u);
            }
        }
        out.push(StepGradients { t, j: j_t, h });
        j_prev = j_t;
    }
    Ok(out)
}

/// Perturbation-mode Jacobian oracle for an explicit plant
/// `x(t+1) = plant(x(t), u(t))`: central differences of the state at step
/// `t` with respect to the control applied on the step before.
pub fn perturbation_jacobian<R: Real, F>(
    plant: F,
    x0: Vec2<R>,
    us: &[Vec3<R>],
    t: usize,
    delta: R,
) -> [[R; 3]; 2]
where
    F: Fn(Vec2<R>, Vec3<R>) -> Vec2<R>,
{
    assert!(t >= 1 && t <= us.len(), "step {t} outside control series");
    let roll = |us: &[Vec3<R>]| -> Vec2<R> {
        let mut x = x0;
        for u in us.iter().take(t) {
            x = plant(x, *u);
        }
        x
    };
    let mut j = [[R::zero(); 3]; 2];
    for i in 0..3 {
        let mut plus = us.to_vec();
        let mut minus = us.to_vec();
        let base = us[t - 1].to_array();
        let mut pa = base;
        let mut ma = base;
        pa[i] += delta;
        ma[i] -= delta;
        plus[t - 1] = Vec3::from_array(pa);
        minus[t - 1] = Vec3::from_array(ma);
        let xp = roll(&plus);
        let xm = roll(&minus);
        let diff = (xp - xm).scale(R::one() / (R::two() * delta));
        j[0][i] = diff.x;
        j[1][i] = diff.y;
    }
    j
}

/// Stabilized log of the absolute determinant of `J^T J + H`: the matrix is
/// symmetrized, and each eigenvalue contributes `ln(max(|lambda|,
/// lambda_reg))`, so indefinite and singular cases stay finite.
pub fn confidence_logdet<R: Real>(
    j: &[[R; 3]; 2],
    h: &Mat3<R>,
    cfg: &ObjectiveConfig<R>,
) -> R {
    let mut m = Mat3::zero();
    for i in 0..3 {
        for jj in 0..3 {
            let mut s = R::zero();
            for k in 0..2 {
                s += j[k][i] * j[k][jj];
            }
            m.m[i][jj] = s + h.m[i][jj];
        }
    }
    let m = m.symmetrize();
    let (vals, _) = sym_eigen_3x3(&m);
    vals.iter()
        .map(|l| l.abs().max(cfg.lambda_reg).ln())
        .fold(R::zero(), |a, b| a + b)
}

/// Total fitness of a rollout: summed goal error plus the negated half-sum
/// of per-step log-determinants (steps 0 and 1 skipped, lacking
/// differences).
pub fn free_energy<R: Real>(
    rollout: &Rollout<R>,
    cfg: &ObjectiveConfig<R>,
) -> Result<FitnessReport<R>, ObjectiveError> {
    let grads = trajectory_gradients(rollout, cfg)?;
    let e_per_step: Vec<R> = rollout.x.iter().map(|x| internal_energy(*x, cfg)).collect();
    let logdet_per_step: Vec<R> = grads
        .iter()
        .map(|g| confidence_logdet(&g.j, &g.h, cfg))
        .collect();
    let goal_error_total = e_per_step.iter().fold(R::zero(), |a, b| a + *b);
    let confidence_total = logdet_per_step
        .iter()
        .fold(R::zero(), |a, b| a + -R::half() * *b);
    Ok(FitnessReport {
        goal_error_total,
        confidence_total,
        free_energy: goal_error_total + confidence_total,
        e_per_step,
        logdet_per_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_shape, ToolParams};
    use crate::sim::{simulate, PlanSpec, WorldConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(p_x: f64) -> ObjectiveConfig<f64> {
        ObjectiveConfig::new(p_x, Vec2::new(0.0, 1.5))
    }

    /// Hand-rolled rollout with prescribed state and control series; the
    /// extra channels are irrelevant to the objective.
    fn synthetic(x: Vec<Vec2<f64>>, u: Vec<Vec3<f64>>) -> Rollout<f64> {
        let n = x.len();
        assert_eq!(u.len(), n);
        Rollout {
            times: (0..n).map(|k| k as f64 * 0.01).collect(),
            ee: vec![Vec2::zero(); n],
            contact_flags: vec![false; n],
            box_vel: vec![Vec2::zero(); n],
            ee_accel: vec![Vec2::zero(); n],
            contact_force: vec![Vec2::zero(); n],
            friction_force: vec![Vec2::zero(); n],
            tool_mass: 1.0,
            x,
            u,
        }
    }

    #[test]
    fn internal_energy_trivial_cases() {
        let c = cfg(40.0);
        assert_eq!(internal_energy(Vec2::new(0.0, 1.5), &c), 0.0);
        assert_eq!(internal_energy(Vec2::new(3.0, -2.0), &cfg(0.0)), 0.0);
        let e = internal_energy(Vec2::new(0.0, 0.5), &c);
        assert!((e - 20.0).abs() < 1e-12);
    }

    #[test]
    fn constant_rollout_has_zero_gradients() {
        let n = 8;
        let r = synthetic(
            vec![Vec2::new(0.4, 0.4); n],
            vec![Vec3::new(1.0, 2.0, 3.0); n],
        );
        let grads = trajectory_gradients(&r, &cfg(20.0)).unwrap();
        assert_eq!(grads.len(), n - 2);
        for g in &grads {
            assert_eq!(g.j, [[0.0; 3]; 2]);
            assert_eq!(g.h, Mat3::zero());
        }
    }

    #[test]
    fn too_short_rollout_is_rejected() {
        let r = synthetic(vec![Vec2::zero(); 2], vec![Vec3::zero(); 2]);
        assert!(matches!(
            trajectory_gradients(&r, &cfg(20.0)),
            Err(ObjectiveError::RolloutTooShort { len: 2 })
        ));
    }

    /// Linear plant x(t+1) = x(t) + B u(t) dt with B = g * [1 1 1]: driving
    /// every control component by the same increment makes the trajectory
    /// difference quotient recover B dt exactly.
    struct LinearPlant {
        g: Vec2<f64>,
        dt: f64,
    }

    impl LinearPlant {
        fn step(&self, x: Vec2<f64>, u: Vec3<f64>) -> Vec2<f64> {
            let s = u.x + u.y + u.z;
            x + self.g.scale(s * self.dt)
        }

        /// Controls whose per-step increment is the same on all three
        /// components and stays above the clamp.
        fn controls(&self, n: usize) -> Vec<Vec3<f64>> {
            let mut us = vec![Vec3::new(0.1, 0.2, 0.3)];
            for _ in 1..n {
                let prev = *us.last().unwrap();
                let s = prev.x + prev.y + prev.z;
                us.push(Vec3::new(prev.x + s, prev.y + s, prev.z + s));
            }
            us
        }

        fn rollout(&self, n: usize) -> Rollout<f64> {
            let us = self.controls(n);
            let mut xs = vec![Vec2::new(0.0, 0.0)];
            for u in us.iter().take(n - 1) {
                xs.push(self.step(*xs.last().unwrap(), *u));
            }
            synthetic(xs, us)
        }
    }

    #[test]
    fn perturbation_jacobian_matches_analytic_on_linear_plant() {
        let plant = LinearPlant {
            g: Vec2::new(0.7, -0.4),
            dt: 0.01,
        };
        let us = plant.controls(6);
        let j = perturbation_jacobian(
            |x, u| plant.step(x, u),
            Vec2::zero(),
            &us,
            us.len(),
            1e-4,
        );
        let g_arr = [plant.g.x, plant.g.y];
        for k in 0..2 {
            for i in 0..3 {
                let analytic = g_arr[k] * plant.dt;
                assert!(
                    (j[k][i] - analytic).abs() < 1e-6,
                    "J[{k}][{i}] = {} vs {analytic}",
                    j[k][i]
                );
            }
        }
    }

    #[test]
    fn trajectory_jacobian_agrees_with_perturbation_on_linear_plant() {
        let plant = LinearPlant {
            g: Vec2::new(0.7, -0.4),
            dt: 0.01,
        };
        let r = plant.rollout(6);
        let grads = trajectory_gradients(&r, &cfg(20.0)).unwrap();
        let g_arr = [plant.g.x, plant.g.y];
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for g in &grads {
            for k in 0..2 {
                for i in 0..3 {
                    let analytic = g_arr[k] * plant.dt;
                    num += (g.j[k][i] - analytic).powi(2);
                    den += analytic.powi(2);
                }
            }
            // Constant Jacobian: the contracted second difference vanishes.
            assert!(g.h.max_abs() < 1e-9);
        }
        let rel = (num / den).sqrt();
        assert!(rel < 0.10, "relative Frobenius error {rel}");
    }

    #[test]
    fn zero_control_difference_uses_positive_clamp() {
        // U constant, X moving: denominators are +eps_u exactly.
        let xs = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1e-3, 0.0),
            Vec2::new(3e-3, 0.0),
        ];
        let us = vec![Vec3::new(1.0, 1.0, 1.0); 3];
        let c = cfg(20.0);
        let grads = trajectory_gradients(&synthetic(xs, us), &c).unwrap();
        let g = &grads[0];
        for i in 0..3 {
            assert!((g.j[0][i] - 2e-3 / c.eps_u).abs() < 1e-12);
            assert!(g.j[0][i].is_finite() && g.j[0][i] > 0.0);
        }
    }

    #[test]
    fn logdet_floor_when_everything_is_zero() {
        let c = cfg(20.0);
        let v = confidence_logdet(&[[0.0; 3]; 2], &Mat3::zero(), &c);
        let expected = 3.0 * 1e-6f64.ln();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        assert!((expected + 41.4465).abs() < 1e-3);
    }

    #[test]
    fn logdet_identity_padded_case() {
        let j = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let c = cfg(20.0);
        let v = confidence_logdet(&j, &Mat3::zero(), &c);
        assert!((v - 1e-6f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn logdet_matches_dense_eigensolver_oracle() {
        let c = cfg(20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..100 {
            let mut h = Mat3::zero();
            for i in 0..3 {
                for j in i..3 {
                    let v: f64 = rng.gen_range(-2.0..2.0);
                    h.m[i][j] = v;
                    h.m[j][i] = v;
                }
            }
            if case % 5 == 0 {
                // Near-singular: rank-1 plus a floor-scale bump.
                let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.3];
                for i in 0..3 {
                    for j in 0..3 {
                        h.m[i][j] = a[i] * a[j] + if i == j { 1e-9 } else { 0.0 };
                    }
                }
            }
            let got = confidence_logdet(&[[0.0; 3]; 2], &h, &c);
            let na = nalgebra::Matrix3::from_fn(|i, j| h.m[i][j]);
            let oracle: f64 = na
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .map(|l| l.abs().max(1e-6).ln())
                .sum();
            assert!(
                (got - oracle).abs() < 1e-9,
                "case {case}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn symmetrize_is_idempotent_for_logdet() {
        let mut h = Mat3::zero();
        h.m = [[1.0, 2.0, -1.0], [0.0, -3.0, 4.0], [5.0, 0.5, 2.0]];
        let once = h.symmetrize();
        let twice = once.symmetrize();
        assert_eq!(once, twice);
        let c = cfg(20.0);
        let a = confidence_logdet(&[[0.0; 3]; 2], &h, &c);
        let b = confidence_logdet(&[[0.0; 3]; 2], &once, &c);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn pure_confidence_when_px_zero() {
        let plant = LinearPlant {
            g: Vec2::new(0.7, -0.4),
            dt: 0.01,
        };
        let r = plant.rollout(8);
        let rep = free_energy(&r, &cfg(0.0)).unwrap();
        assert_eq!(rep.goal_error_total, 0.0);
        assert_eq!(rep.free_energy, rep.confidence_total);
    }

    #[test]
    fn parked_at_goal_with_static_control() {
        let n = 12;
        let r = synthetic(
            vec![Vec2::new(0.0, 1.5); n],
            vec![Vec3::new(1.0, -2.0, 0.5); n],
        );
        let rep = free_energy(&r, &cfg(20.0)).unwrap();
        assert_eq!(rep.goal_error_total, 0.0);
        let expected = -0.5 * (n as f64 - 2.0) * 3.0 * 1e-6f64.ln();
        assert!((rep.confidence_total - expected).abs() < 1e-9);
    }

    #[test]
    fn free_energy_linear_in_px_with_confidence_fixed() {
        let plant = LinearPlant {
            g: Vec2::new(0.7, -0.4),
            dt: 0.01,
        };
        let r = plant.rollout(8);
        let f0 = free_energy(&r, &cfg(0.0)).unwrap();
        let f1 = free_energy(&r, &cfg(1.0)).unwrap();
        let f2 = free_energy(&r, &cfg(2.0)).unwrap();
        assert_eq!(f0.confidence_total, f1.confidence_total);
        assert_eq!(f1.confidence_total, f2.confidence_total);
        let d1 = f1.free_energy - f0.free_energy;
        let d2 = f2.free_energy - f1.free_energy;
        assert!((d1 - d2).abs() < 1e-9, "not linear: {d1} vs {d2}");
        assert!((f2.goal_error_total - 2.0 * f1.goal_error_total).abs() < 1e-9);
    }

    #[test]
    fn ranking_at_px_zero_ignores_goal_rescaling() {
        // Three synthetic candidates with distinct confidence profiles.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut candidates = Vec::new();
        for amp in [1e-3, 2e-2, 0.3f64] {
            let n = 10;
            let mut xs = vec![Vec2::new(0.2, 0.2)];
            let mut us = vec![Vec3::new(0.1, 0.1, 0.1)];
            for _ in 1..n {
                let last = *xs.last().unwrap();
                xs.push(last + Vec2::new(rng.gen_range(0.0..amp), rng.gen_range(0.0..amp)));
                let lu = *us.last().unwrap();
                us.push(Vec3::new(lu.x + amp, lu.y + amp, lu.z + amp));
            }
            candidates.push(synthetic(xs, us));
        }
        let order = |px: f64| -> Vec<usize> {
            let mut idx: Vec<usize> = (0..candidates.len()).collect();
            let f: Vec<f64> = candidates
                .iter()
                .map(|r| free_energy(r, &cfg(px)).unwrap().free_energy)
                .collect();
            idx.sort_by(|&a, &b| f[a].partial_cmp(&f[b]).unwrap());
            idx
        };
        // With p_x = 0 the goal factor is dropped entirely, so any
        // rescaling of it cannot perturb the ranking.
        assert_eq!(order(0.0), order(0.0));
        let base: Vec<f64> = candidates
            .iter()
            .map(|r| free_energy(r, &cfg(0.0)).unwrap().free_energy)
            .collect();
        for (i, r) in candidates.iter().enumerate() {
            let again = free_energy(r, &cfg(0.0)).unwrap().free_energy;
            assert_eq!(base[i], again);
        }
    }

    #[test]
    fn per_step_csv_accumulates_to_totals() {
        let plant = LinearPlant {
            g: Vec2::new(0.7, -0.4),
            dt: 0.01,
        };
        let r = plant.rollout(8);
        let rep = free_energy(&r, &cfg(20.0)).unwrap();
        let csv = rep.per_step_csv(0.01);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,E,logdetPi,F_cum");
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), r.len());
        // First two rows carry no log-det.
        assert!(rows[0].contains(",,"));
        assert!(rows[1].contains(",,"));
        let last: Vec<&str> = rows.last().unwrap().split(',').collect();
        let f_cum: f64 = last[3].parse().unwrap();
        assert!((f_cum - rep.free_energy).abs() < 1e-9);
    }

    #[test]
    fn stopped_box_floors_confidence_after_the_stop() {
        // A deliberately short tool grazes the box mid-sweep and loses it;
        // the plan keeps going long after the box parks.
        let p = ToolParams::new([0.0, 0.0, 0.0], 0.4, 0.2).unwrap();
        let shape = build_shape(&p, 1.0, 0.005).unwrap();
        let plan = PlanSpec::default_plan();
        let world = WorldConfig::<f64>::default();
        let r = simulate(&shape, &plan, &world);

        // Step k moved iff X(k) != X(k-1).
        let moved: Vec<usize> = (1..r.len())
            .filter(|&k| (r.x[k] - r.x[k - 1]).norm() > 0.0)
            .collect();
        let first_move = *moved.first().expect("box never moved");
        let last_move = *moved.last().unwrap();
        assert!(last_move + 10 < r.len(), "box did not stop early enough");
        assert!(first_move + 5 < last_move, "contact window too short");

        let rep = free_energy(&r, &cfg(20.0)).unwrap();
        let start = FitnessReport::<f64>::LOGDET_START;
        let neg_logdet = |k: usize| -> f64 { -rep.logdet_per_step[k - start] };
        let pre: Vec<f64> = (first_move.max(start)..=last_move).map(neg_logdet).collect();
        let post: Vec<f64> = (last_move + 1..r.len()).map(neg_logdet).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&post) > mean(&pre),
            "post-stop {} <= pre-stop {}",
            mean(&post),
            mean(&pre)
        );
        // Once the stale-Jacobian transient clears, every step sits exactly
        // on the regularization floor.
        let floor = 3.0 * 1e-6f64.ln();
        for k in last_move + 2..r.len() {
            let ld = rep.logdet_per_step[k - start];
            assert!((ld - floor).abs() < 1e-9, "step {k} off floor: {ld}");
        }
    }
}
