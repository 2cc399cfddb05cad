//! Tool geometry: a planar stick tool whose curved part is the graph of a
//! third-order polynomial `p(x) = c1 x^3 + c2 x^2 + c3 x` (the constant term
//! is identically zero so the curve starts at the origin), truncated where
//! its arc length reaches a fixed budget `L0`. A straight grasp segment of
//! length `Lg` is prepended, collinear with the curve's initial tangent so
//! the joint is kink-free; the robot holds the tool at the polyline's first
//! point, which is the tool-frame origin.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Vec2;
use crate::scalar::Real;

/// Hard cap on the bisection bracket, as a multiple of the arc length.
const DOMAIN_CAP_FACTOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid tool parameters: {0}")]
    InvalidParams(String),
    #[error("curve domain solve exceeded the hard cap of {cap} m")]
    DomainSolveFailed { cap: f64 },
    #[error("degenerate geometry: fewer than two distinct polyline points")]
    DegenerateGeometry,
    #[error("mesh parse error: {0}")]
    MeshParse(String),
}

/// Design variable: polynomial coefficients plus the fixed shape constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolParams<R> {
    /// Coefficients `(c1, c2, c3)` of `c1 x^3 + c2 x^2 + c3 x`.
    pub coeffs: [R; 3],
    /// Arc length of the curved part, meters.
    pub arc_length: R,
    /// Length of the straight grasp segment, meters.
    pub grasp_length: R,
}

impl<R: Real> ToolParams<R> {
    pub fn new(coeffs: [R; 3], arc_length: R, grasp_length: R) -> Result<Self, GeometryError> {
        let p = Self {
            coeffs,
            arc_length,
            grasp_length,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::InvalidParams(
                "coefficients must be finite".into(),
            ));
        }
        if !(self.arc_length.is_finite() && self.arc_length > R::zero()) {
            return Err(GeometryError::InvalidParams(
                "arc_length must be positive".into(),
            ));
        }
        if !(self.grasp_length.is_finite() && self.grasp_length >= R::zero()) {
            return Err(GeometryError::InvalidParams(
                "grasp_length must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Curve height `p(x)`.
    pub fn poly(&self, x: R) -> R {
        ((self.coeffs[0] * x + self.coeffs[1]) * x + self.coeffs[2]) * x
    }

    /// Curve slope `p'(x)`.
    pub fn poly_deriv(&self, x: R) -> R {
        (R::of(3.0) * self.coeffs[0] * x + R::two() * self.coeffs[1]) * x + self.coeffs[2]
    }

    /// Arc-length integrand `sqrt(1 + p'(x)^2)`.
    fn speed(&self, x: R) -> R {
        let d = self.poly_deriv(x);
        (R::one() + d * d).sqrt()
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "coeffs": [
                self.coeffs[0].to_f64().unwrap(),
                self.coeffs[1].to_f64().unwrap(),
                self.coeffs[2].to_f64().unwrap(),
            ],
            "arc_length": self.arc_length.to_f64().unwrap(),
            "grasp_length": self.grasp_length.to_f64().unwrap(),
        })
        .to_string()
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let p: Self = serde_json::from_str(text)
            .map_err(|e| GeometryError::InvalidParams(format!("tool json: {e}")))?;
        p.validate()?;
        Ok(p)
    }
}

/// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906179845938664,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.906179845938664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

/// Cumulative arc length of the curve over `[0, x]`, composite Gauss-Legendre.
fn arc_length_to<R: Real>(params: &ToolParams<R>, x: R, panels: usize) -> R {
    if x <= R::zero() {
        return R::zero();
    }
    let h = x / R::from_usize(panels).unwrap();
    let mut total = R::zero();
    for k in 0..panels {
        let a = h * R::from_usize(k).unwrap();
        let mid = a + h * R::half();
        let half = h * R::half();
        let mut panel = R::zero();
        for (node, weight) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
            let t = mid + half * R::of(*node);
            panel += R::of(*weight) * params.speed(t);
        }
        total += panel * half;
    }
    total
}

/// Solves for the curve-domain end `x_max` such that the arc length of
/// `(x, p(x))` over `[0, x_max]` equals `arc_length`, by bisection on the
/// monotone cumulative arc-length function.
///
/// The integrand is at least 1, so `x_max <= arc_length` for finite
/// coefficients; the bracket expansion and hard cap guard against
/// pathological inputs.
pub fn solve_curve_domain<R: Real>(params: &ToolParams<R>) -> Result<R, GeometryError> {
    params.validate()?;
    let target = params.arc_length;
    let cap = target * R::of(DOMAIN_CAP_FACTOR);
    let panels = 64;

    let mut hi = target;
    while arc_length_to(params, hi, panels) < target {
        hi = hi * R::two();
        if hi > cap {
            return Err(GeometryError::DomainSolveFailed {
                cap: cap.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let mut lo = R::zero();
    // Bisect until the bracket is tight; 200 iterations bounds the loop for
    // any scalar width.
    for _ in 0..200 {
        let mid = (lo + hi) * R::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if arc_length_to(params, mid, panels) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < R::of(1e-12) * target.max(R::one()) {
            break;
        }
    }
    Ok((lo + hi) * R::half())
}

/// Physical tool: sampled polyline with mass properties. The first point is
/// the tool-frame origin (the grasp point); indices `< curve_start` belong
/// to the grasp segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolShape<R> {
    pub points: Vec<Vec2<R>>,
    /// Index of the first curve sample in `points`.
    pub curve_start: usize,
    /// End of the curve's parameter domain, meters.
    pub curve_domain_end: R,
    /// Total mass, `density * (arc_length + grasp_length)` exactly.
    pub mass: R,
    /// Center of mass in the tool frame.
    pub com: Vec2<R>,
    /// Moment of inertia about the grasp point (the origin), kg m^2.
    pub inertia_z: R,
}

impl<R: Real> ToolShape<R> {
    /// Chord-sum length of the curved part of the polyline.
    pub fn curve_polyline_length(&self) -> R {
        polyline_length(&self.points[self.curve_start.min(self.points.len())..])
    }

    /// Chord-sum length of the whole polyline.
    pub fn total_polyline_length(&self) -> R {
        polyline_length(&self.points)
    }
}

fn polyline_length<R: Real>(points: &[Vec2<R>]) -> R {
    points
        .windows(2)
        .map(|w| (w[1] - w[0]).norm())
        .fold(R::zero(), |a, b| a + b)
}

/// Builds the tool polyline and its mass properties.
///
/// The curve is sampled uniformly in arc length at twice the density implied
/// by `spacing` (so consecutive spacing stays well under the bound even at
/// high curvature). The curve starts at the origin - the grasp point the
/// plan drives - and extends in +x; the grasp handle runs from (0, -Lg)
/// up to the origin, so the polyline walks handle end, origin, curve. Mass
/// properties are integrated over the whole polyline with linear density
/// `density`.
pub fn build_shape<R: Real>(
    params: &ToolParams<R>,
    density: R,
    spacing: R,
) -> Result<ToolShape<R>, GeometryError> {
    if !(density.is_finite() && density > R::zero()) {
        return Err(GeometryError::InvalidParams(
            "density must be positive".into(),
        ));
    }
    if !(spacing.is_finite() && spacing > R::zero()) {
        return Err(GeometryError::InvalidParams(
            "spacing must be positive".into(),
        ));
    }
    let x_max = solve_curve_domain(params)?;

    // Grasp segment direction is fixed at -y of the tool frame; the curve
    // keeps the fixed starting point (0, 0).
    let grasp_end = Vec2::new(R::zero(), -params.grasp_length);

    let seg_ratio = (params.arc_length / spacing).to_f64().unwrap().ceil() as usize;
    let n_curve = 2 * seg_ratio.max(1);

    // Cumulative arc-length table for inverting s -> x, dense enough that
    // linear interpolation error is far below the sampling tolerances.
    let table_n = 4096usize;
    let dx = x_max / R::from_usize(table_n).unwrap();
    let mut cum = Vec::with_capacity(table_n + 1);
    cum.push(R::zero());
    let mut acc = R::zero();
    for k in 0..table_n {
        let a = dx * R::from_usize(k).unwrap();
        let mid = a + dx * R::half();
        let half = dx * R::half();
        let mut panel = R::zero();
        for (node, weight) in GL5_NODES.iter().zip(GL5_WEIGHTS.iter()) {
            let t = mid + half * R::of(*node);
            panel += R::of(*weight) * params.speed(t);
        }
        acc += panel * half;
        cum.push(acc);
    }
    let total_arc = acc;

    let invert = |s: R| -> R {
        if s <= R::zero() {
            return R::zero();
        }
        if s >= total_arc {
            return x_max;
        }
        // Binary search the table, then interpolate linearly.
        let mut lo = 0usize;
        let mut hi = table_n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if cum[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let seg = cum[hi] - cum[lo];
        let frac = if seg > R::zero() {
            (s - cum[lo]) / seg
        } else {
            R::zero()
        };
        dx * (R::from_usize(lo).unwrap() + frac)
    };

    let mut points = Vec::new();
    let mut curve_start = 0usize;
    if params.grasp_length > R::zero() {
        let n_grasp = ((params.grasp_length / spacing).to_f64().unwrap().ceil() as usize).max(1) * 2;
        for j in 0..n_grasp {
            let frac = R::from_usize(n_grasp - j).unwrap() / R::from_usize(n_grasp).unwrap();
            points.push(grasp_end.scale(frac));
        }
        curve_start = n_grasp;
    }
    for j in 0..=n_curve {
        let s = total_arc * R::from_usize(j).unwrap() / R::from_usize(n_curve).unwrap();
        let x = invert(s);
        points.push(Vec2::new(x, params.poly(x)));
    }

    // Mass is pinned by the fixed arc length; com and inertia come from the
    // polyline segments (thin rods, parallel-axis about the origin).
    let mass = density * (params.arc_length + params.grasp_length);
    let mut poly_mass = R::zero();
    let mut first_moment = Vec2::zero();
    let mut inertia = R::zero();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b - a).norm();
        let m = density * len;
        poly_mass += m;
        first_moment = first_moment + (a + b).scale(R::half() * m);
        inertia += m * (a.norm_sq() + b.norm_sq() + a.dot(b)) / R::of(3.0);
    }
    let com = if poly_mass > R::zero() {
        first_moment.scale(R::one() / poly_mass)
    } else {
        Vec2::zero()
    };

    Ok(ToolShape {
        points,
        curve_start,
        curve_domain_end: x_max,
        mass,
        com,
        inertia_z: inertia,
    })
}

/// Sum of absolute exterior angles between consecutive segments of the
/// curved part. The grasp segment is a fixed mounting stub and carries no
/// design curvature, so it never contributes. Zero for fewer than three
/// points.
pub fn turning_angle<R: Real>(shape: &ToolShape<R>) -> R {
    turning_angle_of(&shape.points[shape.curve_start.min(shape.points.len())..])
}

pub(crate) fn turning_angle_of<R: Real>(points: &[Vec2<R>]) -> R {
    let mut total = R::zero();
    for w in points.windows(3) {
        let u = w[1] - w[0];
        let v = w[2] - w[1];
        if u.norm_sq() == R::zero() || v.norm_sq() == R::zero() {
            continue;
        }
        total += u.cross(v).abs().atan2(u.dot(v)).abs();
    }
    total
}

/// In-plane ribbon outline of the curved part at the given total thickness:
/// the curve polyline offset by half the thickness on each side, walked as
/// a closed loop with exactly-collinear runs removed. The grasp stub is a
/// gripper mount, not fabricated geometry, so meshes cover the curve only.
pub fn ribbon_outline<R: Real>(
    shape: &ToolShape<R>,
    thickness: R,
) -> Result<Vec<Vec2<R>>, GeometryError> {
    let curve = &shape.points[shape.curve_start.min(shape.points.len())..];
    let mut pts: Vec<Vec2<R>> = Vec::with_capacity(curve.len());
    for &p in curve {
        if pts.last().map_or(true, |&q| (p - q).norm_sq() > R::zero()) {
            pts.push(p);
        }
    }
    if pts.len() < 2 {
        return Err(GeometryError::DegenerateGeometry);
    }

    let dirs: Vec<Vec2<R>> = pts
        .windows(2)
        .map(|w| (w[1] - w[0]).normalized().expect("deduped segment"))
        .collect();
    let half = thickness * R::half();
    let normal_at = |i: usize| -> Vec2<R> {
        let d = if i == 0 {
            dirs[0]
        } else if i == pts.len() - 1 {
            dirs[i - 1]
        } else {
            match (dirs[i - 1] + dirs[i]).normalized() {
                Some(avg) => avg,
                None => dirs[i - 1],
            }
        };
        d.perp()
    };

    let mut outline = Vec::with_capacity(2 * pts.len());
    for (i, &p) in pts.iter().enumerate() {
        outline.push(p + normal_at(i).scale(half));
    }
    for (i, &p) in pts.iter().enumerate().rev() {
        outline.push(p - normal_at(i).scale(half));
    }

    // Weld: drop repeated points and exactly-collinear interior vertices so
    // a straight tool reduces to its four corners.
    let n = outline.len();
    let mut keep = vec![true; n];
    for i in 0..n {
        let prev = outline[(i + n - 1) % n];
        let cur = outline[i];
        let next = outline[(i + 1) % n];
        if (cur - prev).norm_sq() == R::zero() {
            keep[i] = false;
            continue;
        }
        let u = cur - prev;
        let v = next - cur;
        let cross = u.cross(v).abs();
        if cross <= R::of(1e-12) * u.norm() * v.norm() {
            keep[i] = false;
        }
    }
    let welded: Vec<Vec2<R>> = outline
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect();
    if welded.len() < 3 {
        return Err(GeometryError::DegenerateGeometry);
    }
    Ok(welded)
}

fn polygon_signed_area<R: Real>(poly: &[Vec2<R>]) -> R {
    let mut a = R::zero();
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        a += p.cross(q);
    }
    a * R::half()
}

/// Ear-clipping triangulation of a simple polygon; returns index triples.
fn triangulate<R: Real>(poly: &[Vec2<R>]) -> Vec<[usize; 3]> {
    let n = poly.len();
    let mut idx: Vec<usize> = (0..n).collect();
    if polygon_signed_area(poly) < R::zero() {
        idx.reverse();
    }
    let mut tris = Vec::with_capacity(n.saturating_sub(2));
    let mut guard = 0usize;
    while idx.len() > 3 && guard < n * n {
        guard += 1;
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            if (b - a).cross(c - b) <= R::zero() {
                continue; // reflex corner
            }
            let mut contains_other = false;
            for &other in &idx {
                if other == ia || other == ib || other == ic {
                    continue;
                }
                if point_in_triangle(poly[other], a, b, c) {
                    contains_other = true;
                    break;
                }
            }
            if !contains_other {
                tris.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Degenerate leftovers: fan whatever remains.
            break;
        }
    }
    if idx.len() >= 3 {
        for k in 1..idx.len() - 1 {
            tris.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    tris
}

fn point_in_triangle<R: Real>(p: Vec2<R>, a: Vec2<R>, b: Vec2<R>, c: Vec2<R>) -> bool {
    let d1 = (b - a).cross(p - a);
    let d2 = (c - b).cross(p - b);
    let d3 = (a - c).cross(p - c);
    (d1 >= R::zero() && d2 >= R::zero() && d3 >= R::zero())
        || (d1 <= R::zero() && d2 <= R::zero() && d3 <= R::zero())
}

/// Extrudes the polyline ribbon into a watertight prism and serializes it
/// as OBJ text with deterministic vertex ordering: the bottom outline ring
/// first (z = 0), then the top ring (z = height), then side faces, bottom
/// cap, top cap.
pub fn export_mesh<R: Real>(
    shape: &ToolShape<R>,
    thickness: R,
    height: R,
) -> Result<String, GeometryError> {
    if !(thickness.is_finite() && thickness > R::zero() && height.is_finite() && height > R::zero())
    {
        return Err(GeometryError::InvalidParams(
            "thickness and height must be positive".into(),
        ));
    }
    let outline = ribbon_outline(shape, thickness)?;
    let n = outline.len();

    let mut obj = String::new();
    obj.push_str("# planar tool prism\n");
    for p in &outline {
        obj.push_str(&format!("v {} {} {}\n", p.x, p.y, R::zero()));
    }
    for p in &outline {
        obj.push_str(&format!("v {} {} {}\n", p.x, p.y, height));
    }

    let mut faces: Vec<[usize; 3]> = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        // bottom_i, bottom_j, top_j, top_i
        faces.push([i, j, n + j]);
        faces.push([i, n + j, n + i]);
    }
    let cap = triangulate(&outline);
    for t in &cap {
        faces.push([t[0], t[2], t[1]]); // bottom cap, downward
    }
    for t in &cap {
        faces.push([n + t[0], n + t[1], n + t[2]]); // top cap, upward
    }

    for f in &faces {
        obj.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    Ok(obj)
}

/// Minimal OBJ parser for `v`/`f` lines, the inverse of [`export_mesh`]'s
/// serialization. Face indices are returned zero-based.
pub fn parse_obj<R: Real>(text: &str) -> Result<(Vec<[R; 3]>, Vec<[usize; 3]>), GeometryError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coord = [R::zero(); 3];
                for c in coord.iter_mut() {
                    let tok = it.next().ok_or_else(|| {
                        GeometryError::MeshParse(format!("line {}: short vertex", lineno + 1))
                    })?;
                    *c = tok.parse::<R>().map_err(|_| {
                        GeometryError::MeshParse(format!("line {}: bad float {tok}", lineno + 1))
                    })?;
                }
                vertices.push(coord);
            }
            Some("f") => {
                let mut idx = [0usize; 3];
                for v in idx.iter_mut() {
                    let tok = it.next().ok_or_else(|| {
                        GeometryError::MeshParse(format!("line {}: short face", lineno + 1))
                    })?;
                    let raw: usize = tok.split('/').next().unwrap_or(tok).parse().map_err(|_| {
                        GeometryError::MeshParse(format!("line {}: bad index {tok}", lineno + 1))
                    })?;
                    if raw == 0 {
                        return Err(GeometryError::MeshParse(format!(
                            "line {}: zero face index",
                            lineno + 1
                        )));
                    }
                    *v = raw - 1;
                }
                faces.push(idx);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}
