//! Planar tool-use simulator. The tool is rigidly attached to a kinematic
//! grasp point that tracks a piecewise-linear plan at constant speed; the
//! box is a translation-only, axis-aligned body driven by penalty contact
//! forces and Coulomb floor friction. The recorded control series is the
//! reaction wrench the robot must supply at the grasp point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::ToolShape;
use crate::linalg::{Vec2, Vec3};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
}

/// Fixed end-effector motion plan: the grasp point traverses the waypoint
/// polyline at constant speed with constant tool orientation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "R: Real")]
pub struct PlanSpec<R> {
    /// Grasp-point waypoints, meters. At least two; consecutive distinct.
    pub waypoints: Vec<Vec2<R>>,
    /// Traversal speed, m/s.
    pub speed: R,
    /// Constant tool orientation, radians.
    pub yaw: R,
}

impl<R: Real> PlanSpec<R> {
    pub fn new(waypoints: Vec<Vec2<R>>, speed: R, yaw: R) -> Result<Self, SimError> {
        if waypoints.len() < 2 {
            return Err(SimError::InvalidPlan("need at least two waypoints".into()));
        }
        for w in waypoints.windows(2) {
            if (w[1] - w[0]).norm_sq() == R::zero() {
                return Err(SimError::InvalidPlan(
                    "consecutive waypoints must be distinct".into(),
                ));
            }
        }
        if !(speed.is_finite() && speed > R::zero()) {
            return Err(SimError::InvalidPlan("speed must be positive".into()));
        }
        if !yaw.is_finite() {
            return Err(SimError::InvalidPlan("yaw must be finite".into()));
        }
        Ok(Self {
            waypoints,
            speed,
            yaw,
        })
    }

    /// Default sweep-then-pull plan: arrive beside the box, sweep across
    /// the floor diagonal, pull back along the second axis.
    pub fn default_plan() -> Self {
        let qa = R::of(0.9);
        let qb = R::of(0.3);
        Self::new(
            vec![
                Vec2::new(qa, R::zero()),
                Vec2::new(R::zero(), qa),
                Vec2::new(R::zero(), qb),
            ],
            R::half(),
            R::zero(),
        )
        .expect("default plan is valid")
    }

    pub fn path_length(&self) -> R {
        self.waypoints
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(R::zero(), |a, b| a + b)
    }

    /// Grasp-point position after traveling arc distance `s` along the
    /// plan; clamped to the endpoints.
    pub fn position_at(&self, s: R) -> Vec2<R> {
        if s <= R::zero() {
            return self.waypoints[0];
        }
        let mut remaining = s;
        for w in self.waypoints.windows(2) {
            let seg = w[1] - w[0];
            let len = seg.norm();
            if remaining <= len {
                return w[0] + seg.scale(remaining / len);
            }
            remaining -= len;
        }
        *self.waypoints.last().unwrap()
    }
}

impl<R: Real> Default for PlanSpec<R> {
    fn default() -> Self {
        Self::default_plan()
    }
}

/// Total plan duration: waypoint path length over traversal speed.
pub fn required_duration<R: Real>(plan: &PlanSpec<R>) -> R {
    plan.path_length() / plan.speed
}

/// Scene constants for one rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "R: Real")]
pub struct WorldConfig<R> {
    pub box_half_extents: Vec2<R>,
    pub box_mass: R,
    pub box_start: Vec2<R>,
    pub goal: Vec2<R>,
    /// Coulomb friction coefficient between box and floor.
    pub friction: R,
    pub gravity: R,
    /// Penalty stiffness per contact sample, N/m.
    pub contact_stiffness: R,
    /// Normal damping per contact sample, N·s/m. The damped penalty force
    /// max(0, k·depth + c·rate) stays repulsive; without it the stiff
    /// penalty is elastic and the box is batted ahead instead of carried.
    pub contact_damping: R,
    /// Coulomb coefficient between tool and box. Kinetic friction along
    /// the contact tangent couples the box to a sliding tool face; without
    /// it a hook cannot drag the box through the pull leg at all and every
    /// profile releases the moment the sweep turns.
    pub tool_friction: R,
    /// Recording step, seconds.
    pub dt: R,
    /// Upper bound on the internal integration substep, seconds. The
    /// penalty contact of many simultaneous samples is stiff; integrating
    /// below this bound keeps semi-implicit Euler stable while the recorded
    /// series stays on the `dt` grid.
    pub max_substep: R,
}

impl<R: Real> WorldConfig<R> {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.box_mass.is_finite() && self.box_mass > R::zero()) {
            return Err(SimError::InvalidWorld("box_mass must be positive".into()));
        }
        if !(self.dt.is_finite() && self.dt > R::zero()) {
            return Err(SimError::InvalidWorld("dt must be positive".into()));
        }
        if !(self.contact_stiffness.is_finite() && self.contact_stiffness > R::zero()) {
            return Err(SimError::InvalidWorld(
                "contact_stiffness must be positive".into(),
            ));
        }
        if !(self.contact_damping.is_finite() && self.contact_damping >= R::zero()) {
            return Err(SimError::InvalidWorld(
                "contact_damping must be non-negative".into(),
            ));
        }
        if !(self.tool_friction.is_finite() && self.tool_friction >= R::zero()) {
            return Err(SimError::InvalidWorld(
                "tool_friction must be non-negative".into(),
            ));
        }
        if !(self.friction.is_finite() && self.friction >= R::zero()) {
            return Err(SimError::InvalidWorld(
                "friction must be non-negative".into(),
            ));
        }
        if !(self.max_substep.is_finite() && self.max_substep > R::zero()) {
            return Err(SimError::InvalidWorld(
                "max_substep must be positive".into(),
            ));
        }
        if self.box_half_extents.x <= R::zero() || self.box_half_extents.y <= R::zero() {
            return Err(SimError::InvalidWorld(
                "box_half_extents must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl<R: Real> Default for WorldConfig<R> {
    fn default() -> Self {
        let box_mass = R::of(0.1);
        let contact_stiffness = R::of(5000.0);
        Self {
            box_half_extents: Vec2::new(R::of(0.05), R::of(0.05)),
            box_mass,
            // On the sweep diagonal, half a box above the grasp path: the
            // nominal straight tool meets the box bottom edge exactly
            // mid-sweep and plows it toward the goal side.
            box_start: Vec2::new(R::of(0.5), R::of(0.5)),
            goal: Vec2::new(R::zero(), R::of(1.5)),
            friction: R::half(),
            gravity: R::of(9.81),
            contact_stiffness,
            // Critical damping against the nominal box; heavier boxes are
            // underdamped, so mass perturbations change how much they bounce.
            contact_damping: R::two() * (contact_stiffness * box_mass).sqrt(),
            tool_friction: R::half(),
            dt: R::of(0.01),
            max_substep: R::of(2e-4),
        }
    }
}

/// Recorded rollout on the `dt` grid. All series share length `T + 1`;
/// forces at index `k > 0` are averages over the window `(t_{k-1}, t_k]`,
/// index 0 holds the initial state with zero forces.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<R> {
    pub times: Vec<R>,
    /// Box-center positions.
    pub x: Vec<Vec2<R>>,
    /// Reaction wrench (F_x, F_y, tau_z) at the grasp point.
    pub u: Vec<Vec3<R>>,
    /// Grasp-point positions.
    pub ee: Vec<Vec2<R>>,
    pub contact_flags: Vec<bool>,
    /// Box velocities.
    pub box_vel: Vec<Vec2<R>>,
    /// Grasp-point accelerations from recorded positions.
    pub ee_accel: Vec<Vec2<R>>,
    /// Window-averaged contact force applied to the box.
    pub contact_force: Vec<Vec2<R>>,
    /// Window-averaged friction force applied to the box, including the
    /// impulses of static stops, so the momentum balance closes exactly.
    pub friction_force: Vec<Vec2<R>>,
    pub tool_mass: R,
}

impl<R: Real> Rollout<R> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV export: `t,x,y,ee_x,ee_y,u_fx,u_fy,u_tz,contact`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,ee_x,ee_y,u_fx,u_fy,u_tz,contact\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                self.times[k],
                self.x[k].x,
                self.x[k].y,
                self.ee[k].x,
                self.ee[k].y,
                self.u[k].x,
                self.u[k].y,
                self.u[k].z,
                u8::from(self.contact_flags[k]),
            ));
        }
        out
    }
}

/// Runs the fixed plan with the tool attached and integrates the box.
///
/// Internally the window `dt` is split into equal substeps no longer than
/// `max_substep`; recorded forces are time averages over each window, so
/// the logged momentum balance `m * dv = dt * (contact + friction)` holds
/// to rounding.
pub fn simulate<R: Real>(shape: &ToolShape<R>, plan: &PlanSpec<R>, world: &WorldConfig<R>) -> Rollout<R> {
    let dt = world.dt;
    let n_sub = (dt / world.max_substep).to_f64().unwrap().ceil().max(1.0) as usize;
    let h = dt / R::from_usize(n_sub).unwrap();

    let duration = required_duration(plan);
    let steps = (duration / dt).to_f64().unwrap().ceil().max(1.0) as usize;

    // Constant yaw: rotate the tool points once. Every polyline sample
    // collides, grasp stub included; the stub is the pocket wall that lets
    // an enclosing tool cage the box through the pull leg.
    let tool_pts: Vec<Vec2<R>> = shape.points.iter().map(|p| p.rotate(plan.yaw)).collect();
    let (mut lo, mut hi) = (tool_pts[0], tool_pts[0]);
    for p in &tool_pts {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }

    let m = world.box_mass;
    let (hx, hy) = (world.box_half_extents.x, world.box_half_extents.y);
    let mu_g = world.friction * world.gravity;
    let static_force_cap = world.friction * m * world.gravity;

    let mut box_pos = world.box_start;
    let mut box_vel = Vec2::zero();

    let cap = steps + 1;
    let mut times = Vec::with_capacity(cap);
    let mut xs = Vec::with_capacity(cap);
    let mut ees = Vec::with_capacity(cap);
    let mut vels = Vec::with_capacity(cap);
    let mut contact_flags = Vec::with_capacity(cap);
    let mut contact_forces = Vec::with_capacity(cap);
    let mut friction_forces = Vec::with_capacity(cap);
    let mut torques = Vec::with_capacity(cap);

    times.push(R::zero());
    xs.push(box_pos);
    ees.push(plan.position_at(R::zero()));
    vels.push(box_vel);
    contact_flags.push(false);
    contact_forces.push(Vec2::zero());
    friction_forces.push(Vec2::zero());
    torques.push(R::zero());

    for k in 1..=steps {
        let mut impulse_c = Vec2::zero();
        let mut impulse_f = Vec2::zero();
        let mut torque_time = R::zero();
        let mut any_contact = false;

        for i in 0..n_sub {
            let g = (k - 1) * n_sub + i;
            let t_sub = h * R::from_usize(g).unwrap();
            let ee = plan.position_at(plan.speed * t_sub);
            let ee_next = plan.position_at(plan.speed * (t_sub + h));
            // Rigid kinematic tool at fixed yaw: every sample shares this.
            let tool_vel = (ee_next - ee).scale(R::one() / h);

            // Per-sample penalty forces, minimal-translation direction.
            let mut f_c = Vec2::zero();
            let mut tau = R::zero();
            let overlaps = ee.x + lo.x < box_pos.x + hx
                && ee.x + hi.x > box_pos.x - hx
                && ee.y + lo.y < box_pos.y + hy
                && ee.y + hi.y > box_pos.y - hy;
            if overlaps {
                for &rp in &tool_pts {
                    let q = ee + rp;
                    let dx = q.x - box_pos.x;
                    let dy = q.y - box_pos.y;
                    if dx.abs() >= hx || dy.abs() >= hy {
                        continue;
                    }
                    let pen_xn = hx + dx; // depth from the low-x face
                    let pen_xp = hx - dx;
                    let pen_yn = hy + dy;
                    let pen_yp = hy - dy;
                    let mut depth = pen_xn;
                    let mut normal = Vec2::new(R::one(), R::zero());
                    if pen_xp < depth {
                        depth = pen_xp;
                        normal = Vec2::new(-R::one(), R::zero());
                    }
                    if pen_yn < depth {
                        depth = pen_yn;
                        normal = Vec2::new(R::zero(), R::one());
                    }
                    if pen_yp < depth {
                        depth = pen_yp;
                        normal = Vec2::new(R::zero(), -R::one());
                    }
                    any_contact = true;
                    // Damped penalty, clipped repulsive: the normal rate is
                    // positive while the tool closes on the box.
                    let rate = (tool_vel - box_vel).dot(normal);
                    let mag = world.contact_stiffness * depth + world.contact_damping * rate;
                    if mag <= R::zero() {
                        continue;
                    }
                    // Kinetic Coulomb friction opposing the box's slip along
                    // the tool face. This is what lets a face that stays
                    // pressed against the box drag it along the pull leg.
                    let t_hat = Vec2::new(-normal.y, normal.x);
                    let slip = (box_vel - tool_vel).dot(t_hat);
                    let slip_sign = if slip > R::zero() {
                        R::one()
                    } else if slip < R::zero() {
                        -R::one()
                    } else {
                        R::zero()
                    };
                    let f = normal.scale(mag) - t_hat.scale(world.tool_friction * mag * slip_sign);
                    f_c = f_c + f;
                    tau += rp.cross(f);
                }
            }

            // Semi-implicit Euler with Coulomb friction. Static stop: the
            // velocity is zeroed when friction would cancel it within one
            // substep and the net contact force is within the static cone.
            box_vel = box_vel + f_c.scale(h / m);
            let speed = box_vel.norm();
            if speed < mu_g * h && f_c.norm() <= static_force_cap {
                impulse_f = impulse_f - box_vel.scale(m);
                box_vel = Vec2::zero();
            } else if speed > R::zero() {
                let drop = (mu_g * h).min(speed);
                let dv = box_vel.scale(drop / speed);
                impulse_f = impulse_f - dv.scale(m);
                box_vel = box_vel - dv;
            }
            box_pos = box_pos + box_vel.scale(h);

            impulse_c = impulse_c + f_c.scale(h);
            torque_time += tau * h;
        }

        times.push(dt * R::from_usize(k).unwrap());
        xs.push(box_pos);
        ees.push(plan.position_at(plan.speed * dt * R::from_usize(k).unwrap()));
        vels.push(box_vel);
        contact_flags.push(any_contact);
        contact_forces.push(impulse_c.scale(R::one() / dt));
        friction_forces.push(impulse_f.scale(R::one() / dt));
        torques.push(torque_time / dt);
    }

    // Grasp-point kinematics from the recorded positions; the reaction
    // wrench combines tool inertia with the negated contact wrench.
    let n = times.len();
    let mut ee_accel = vec![Vec2::zero(); n];
    let mut ee_vel = vec![Vec2::zero(); n];
    for k in 1..n {
        ee_vel[k] = (ees[k] - ees[k - 1]).scale(R::one() / dt);
    }
    for k in 1..n {
        ee_accel[k] = (ee_vel[k] - ee_vel[k - 1]).scale(R::one() / dt);
    }
    let mut us = Vec::with_capacity(n);
    for k in 0..n {
        let inertial = ee_accel[k].scale(shape.mass);
        us.push(Vec3::new(
            inertial.x - contact_forces[k].x,
            inertial.y - contact_forces[k].y,
            -torques[k],
        ));
    }

    Rollout {
        times,
        x: xs,
        u: us,
        ee: ees,
        contact_flags,
        box_vel: vels,
        ee_accel,
        contact_force: contact_forces,
        friction_force: friction_forces,
        tool_mass: shape.mass,
    }
}
