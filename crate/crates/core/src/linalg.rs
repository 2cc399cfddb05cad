//! Small fixed-size linear algebra used throughout the crate: planar vectors,
//! a 3-vector for wrenches and coefficients, 3x3 symmetric eigensolves
//! (cyclic Jacobi), and a dense Cholesky for the Gaussian-process surrogate.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Planar vector (positions, velocities, forces).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2<R> {
    pub x: R,
    pub y: R,
}

impl<R: Real> Vec2<R> {
    pub fn new(x: R, y: R) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(R::zero(), R::zero())
    }

    pub fn dot(self, o: Self) -> R {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product `self × o`.
    pub fn cross(self, o: Self) -> R {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> R {
        self.dot(self).sqrt()
    }

    pub fn norm_sq(self) -> R {
        self.dot(self)
    }

    pub fn scale(self, s: R) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    /// Unit vector; `None` for the zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > R::zero() {
            Some(self.scale(R::one() / n))
        } else {
            None
        }
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: R) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl<R: Real> std::ops::Add for Vec2<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<R: Real> std::ops::Sub for Vec2<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<R: Real> std::ops::Neg for Vec2<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// 3-vector: control wrenches `(f_x, f_y, tau_z)` and coefficient triples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3<R> {
    pub x: R,
    pub y: R,
    pub z: R,
}

impl<R: Real> Vec3<R> {
    pub fn new(x: R, y: R, z: R) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(R::zero(), R::zero(), R::zero())
    }

    pub fn from_array(a: [R; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [R; 3] {
        [self.x, self.y, self.z]
    }

    pub fn get(self, i: usize) -> R {
        match i {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("Vec3 index out of range"),
        }
    }

    pub fn norm(self) -> R {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(self) -> R {
        self.x * self.x + self.y * self.y + self.z * self.z
    }
}

impl<R: Real> std::ops::Add for Vec3<R> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<R: Real> std::ops::Sub for Vec3<R> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

/// Dense 3x3 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<R> {
    pub m: [[R; 3]; 3],
}

impl<R: Real> Mat3<R> {
    pub fn zero() -> Self {
        Self {
            m: [[R::zero(); 3]; 3],
        }
    }

    pub fn identity() -> Self {
        let mut a = Self::zero();
        for i in 0..3 {
            a.m[i][i] = R::one();
        }
        a
    }

    pub fn from_diag(d: [R; 3]) -> Self {
        let mut a = Self::zero();
        for i in 0..3 {
            a.m[i][i] = d[i];
        }
        a
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = self.m[i][j] + o.m[i][j];
            }
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = R::zero();
                for k in 0..3 {
                    s += self.m[i][k] * o.m[k][j];
                }
                r.m[i][j] = s;
            }
        }
        r
    }

    pub fn mul_vec(&self, v: Vec3<R>) -> Vec3<R> {
        let a = v.to_array();
        let mut out = [R::zero(); 3];
        for i in 0..3 {
            for (j, aj) in a.iter().enumerate() {
                out[i] += self.m[i][j] * *aj;
            }
        }
        Vec3::from_array(out)
    }

    pub fn scale(&self, s: R) -> Self {
        let mut r = *self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] *= s;
            }
        }
        r
    }

    /// `(M + M^T) / 2`.
    pub fn symmetrize(&self) -> Self {
        let mut r = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = (self.m[i][j] + self.m[j][i]) * R::half();
            }
        }
        r
    }

    pub fn max_abs(&self) -> R {
        let mut m = R::zero();
        for row in &self.m {
            for v in row {
                m = m.max(v.abs());
            }
        }
        m
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors as the *columns*
/// of the returned matrix, so `A = V diag(w) V^T`. Eigenvalues are not
/// sorted. The input is assumed symmetric; only the upper triangle drives
/// the rotations after an initial symmetrization.
pub fn sym_eigen_3x3<R: Real>(a: &Mat3<R>) -> ([R; 3], Mat3<R>) {
    let mut a = a.symmetrize();
    let mut v = Mat3::identity();
    let scale = a.max_abs();
    if scale == R::zero() {
        return ([R::zero(); 3], v);
    }
    let tol = R::epsilon() * scale;

    for _sweep in 0..64 {
        let off = (a.m[0][1].abs() + a.m[0][2].abs() + a.m[1][2].abs()) / R::of(3.0);
        if off <= tol {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a.m[p][q];
            if apq.abs() <= tol * R::of(1e-3) {
                continue;
            }
            let theta = (a.m[q][q] - a.m[p][p]) / (R::two() * apq);
            // Stable tangent of the rotation angle.
            let t = {
                let s = if theta >= R::zero() {
                    R::one()
                } else {
                    -R::one()
                };
                s / (theta.abs() + (theta * theta + R::one()).sqrt())
            };
            let c = R::one() / (t * t + R::one()).sqrt();
            let s = t * c;

            for k in 0..3 {
                let akp = a.m[k][p];
                let akq = a.m[k][q];
                a.m[k][p] = c * akp - s * akq;
                a.m[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a.m[p][k];
                let aqk = a.m[q][k];
                a.m[p][k] = c * apk - s * aqk;
                a.m[q][k] = s * apk + c * aqk;
            }
            for k in 0..3 {
                let vkp = v.m[k][p];
                let vkq = v.m[k][q];
                v.m[k][p] = c * vkp - s * vkq;
                v.m[k][q] = s * vkp + c * vkq;
            }
        }
    }

    ([a.m[0][0], a.m[1][1], a.m[2][2]], v)
}

/// Eigen-decomposition of a dense symmetric matrix of any size by cyclic
/// Jacobi rotations; the `n = 3` twin of [`sym_eigen_3x3`] for callers that
/// are generic over dimension. Eigenvectors are the columns of the second
/// return value; eigenvalues are unsorted.
pub fn sym_eigen<R: Real>(a: &[Vec<R>]) -> (Vec<R>, Vec<Vec<R>>) {
    let n = a.len();
    let mut m = vec![vec![R::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = (a[i][j] + a[j][i]) * R::half();
        }
    }
    let mut v = vec![vec![R::zero(); n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = R::one();
    }
    let scale = m
        .iter()
        .flat_map(|r| r.iter())
        .fold(R::zero(), |acc, x| acc.max(x.abs()));
    if scale == R::zero() || n < 2 {
        return (m.iter().enumerate().map(|(i, r)| r[i]).collect(), v);
    }
    let tol = R::epsilon() * scale;

    for _sweep in 0..100 {
        let mut off = R::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[p][q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq.abs() <= tol * R::of(1e-3) {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (R::two() * apq);
                let t = {
                    let s = if theta >= R::zero() {
                        R::one()
                    } else {
                        -R::one()
                    };
                    s / (theta.abs() + (theta * theta + R::one()).sqrt())
                };
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = m[k][p];
                    let akq = m[k][q];
                    m[k][p] = c * akp - s * akq;
                    m[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p][k];
                    let aqk = m[q][k];
                    m[p][k] = c * apk - s * aqk;
                    m[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    (m.iter().enumerate().map(|(i, r)| r[i]).collect(), v)
}

/// Dense Cholesky factorization `A = L L^T`, returning the lower factor in
/// row-major order. Fails when a pivot is not strictly positive.
pub fn cholesky<R: Real>(a: &[Vec<R>]) -> Option<Vec<Vec<R>>> {
    let n = a.len();
    let mut l = vec![vec![R::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= R::zero() || !s.is_finite() {
                    return None;
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` given the lower Cholesky factor.
pub fn cholesky_solve<R: Real>(l: &[Vec<R>], b: &[R]) -> Vec<R> {
    let n = l.len();
    let mut y = vec![R::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
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
