//! Collision geometry in R³ × R³ and tangent calculus on S².
//!
//! A velocity pair (v, w) is written as a center of mass `z`, a half relative
//! speed `r` and a direction `σ`. A collision replaces `σ` by `σ'` and keeps
//! `(z, r)`, so momentum and energy are conserved by construction.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::gauss_legendre;

/// Tolerance on |σ| − 1 for caller-supplied unit vectors.
pub const UNIT_TOL: f64 = 1e-9;

/// Tolerance on x·σ for caller-supplied tangent vectors.
pub const TANGENT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coincident velocities: |v - w| = 0")]
    CoincidentVelocities,
    #[error("vector is not unit length: |x| = {0}")]
    NotUnit(f64),
    #[error("vector is not tangent: x·σ = {0}")]
    NotTangent(f64),
    #[error("axis index {0} outside 1..=3")]
    BadAxis(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    /// Canonical basis vector `e_k`, `k` in 1..=3.
    pub fn basis(k: usize) -> Result<Self, GeometryError> {
        match k {
            1 => Ok(Vec3::new(1.0, 0.0, 0.0)),
            2 => Ok(Vec3::new(0.0, 1.0, 0.0)),
            3 => Ok(Vec3::new(0.0, 0.0, 1.0)),
            _ => Err(GeometryError::BadAxis(k)),
        }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self / self.norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Two unit vectors completing `self` (assumed unit) to a right-handed frame.
    pub fn orthonormal_pair(self) -> (Vec3, Vec3) {
        let helper = if self.x.abs() < 0.6 {
            Vec3::new(1.0, 0.0, 0.0)
        } else if self.y.abs() < 0.6 {
            Vec3::new(0.0, 1.0, 0.0)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        let e1 = (helper - self * helper.dot(self)).normalized();
        let e2 = self.cross(e1);
        (e1, e2)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, a: f64) -> Vec3 {
        Vec3::new(self.x * a, self.y * a, self.z * a)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, a: f64) -> Vec3 {
        Vec3::new(self.x / a, self.y / a, self.z / a)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// 3×3 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub fn identity() -> Self {
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        let mut t = [[0.0; 3]; 3];
        for (i, row) in t.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = m[j][i];
            }
        }
        Mat3(t)
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut p = [[0.0; 3]; 3];
        for (i, row) in p.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(p)
    }

    /// Rotation from a unit quaternion (w, x, y, z).
    pub fn from_quaternion(q: [f64; 4]) -> Mat3 {
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        Mat3([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ])
    }

    /// Uniformly distributed rotation (Haar measure) from a Gaussian quaternion.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> Mat3 {
        use rand_distr::{Distribution, StandardNormal};
        let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
        Mat3::from_quaternion(q)
    }
}

/// The (z, r, σ) decomposition of a velocity pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionFrame {
    pub z: Vec3,
    pub r: f64,
    pub sigma: Vec3,
}

impl CollisionFrame {
    /// Velocities `(z + rσ, z − rσ)`.
    pub fn velocities(&self) -> (Vec3, Vec3) {
        (self.z + self.sigma * self.r, self.z - self.sigma * self.r)
    }
}

pub fn to_frame(v: Vec3, w: Vec3) -> Result<CollisionFrame, GeometryError> {
    let d = v - w;
    let len = d.norm();
    if len == 0.0 {
        return Err(GeometryError::CoincidentVelocities);
    }
    Ok(CollisionFrame {
        z: (v + w) * 0.5,
        r: 0.5 * len,
        sigma: d / len,
    })
}

fn check_unit(s: Vec3) -> Result<Vec3, GeometryError> {
    let n = s.norm();
    if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
        return Err(GeometryError::NotUnit(n));
    }
    Ok(s / n)
}

/// Post-collision velocities `(z + rσ', z − rσ')`.
pub fn post_collision(frame: &CollisionFrame, sigma_p: Vec3) -> Result<(Vec3, Vec3), GeometryError> {
    let s = check_unit(sigma_p)?;
    Ok((frame.z + s * frame.r, frame.z - s * frame.r))
}

/// Rotation generator `b_k(v) = e_k × v`.
pub fn b_field(k: usize, v: Vec3) -> Result<Vec3, GeometryError> {
    Ok(Vec3::basis(k)?.cross(v))
}

/// `Σ_k b_k(v) (b_k(v)·x)`, the tensor `Σ_k b_k ⊗ b_k` applied to `x`.
pub fn bb_apply(v: Vec3, x: Vec3) -> Vec3 {
    let mut acc = Vec3::ZERO;
    for k in 1..=3 {
        let b = Vec3::basis(k).unwrap().cross(v);
        acc += b * b.dot(x);
    }
    acc
}

/// `|x − y|²_{σ,σ'}` for `x` tangent at `σ` and `y` tangent at `σ'`.
pub fn tangent_diff_sq(x: Vec3, y: Vec3, sigma: Vec3, sigma_p: Vec3) -> Result<f64, GeometryError> {
    let s = check_unit(sigma)?;
    let sp = check_unit(sigma_p)?;
    let tx = x.dot(s);
    if tx.abs() > TANGENT_TOL * (1.0 + x.norm()) {
        return Err(GeometryError::NotTangent(tx));
    }
    let ty = y.dot(sp);
    if ty.abs() > TANGENT_TOL * (1.0 + y.norm()) {
        return Err(GeometryError::NotTangent(ty));
    }
    Ok(tangent_diff_sq_unchecked(x, y, s, sp))
}

/// Closed form `|x|² + |y|² − 2(σ×x)·(σ'×y)` without input validation.
#[inline]
pub fn tangent_diff_sq_unchecked(x: Vec3, y: Vec3, sigma: Vec3, sigma_p: Vec3) -> f64 {
    (x.norm_sq() + y.norm_sq() - 2.0 * sigma.cross(x).dot(sigma_p.cross(y))).max(0.0)
}

/// `Σ_k (b_k(σ)·x − b_k(σ')·y)²`, the defining sum of `|x − y|²_{σ,σ'}`.
pub fn tangent_diff_sq_by_fields(x: Vec3, y: Vec3, sigma: Vec3, sigma_p: Vec3) -> f64 {
    (1..=3)
        .map(|k| {
            let e = Vec3::basis(k).unwrap();
            let d = e.cross(sigma).dot(x) - e.cross(sigma_p).dot(y);
            d * d
        })
        .sum()
}

/// Integral of `h(v, w)` over R³×R³ evaluated twice: directly in `(v, w)` and
/// in `(z, r, σ)` with weight `8r²`.
///
/// Both use tensor Gauss–Legendre rules with `nodes` points per axis on
/// `[−extent, extent]` (and `r ∈ [0, √3·extent]`), so `h` must be negligible
/// outside that box.
pub fn jacobian_check<H>(h: H, extent: f64, nodes: usize) -> (f64, f64)
where
    H: Fn(Vec3, Vec3) -> f64 + Sync,
{
    use rayon::prelude::*;
    let (x, wx) = gauss_legendre(nodes);
    let xs: Vec<f64> = x.iter().map(|t| t * extent).collect();
    let ws: Vec<f64> = wx.iter().map(|t| t * extent).collect();
    let n = nodes;

    let direct: f64 = (0..n * n * n)
        .into_par_iter()
        .map(|a| {
            let (i, j, k) = (a / (n * n), (a / n) % n, a % n);
            let v = Vec3::new(xs[i], xs[j], xs[k]);
            let wv = ws[i] * ws[j] * ws[k];
            let mut acc = 0.0;
            for l in 0..n {
                for m in 0..n {
                    for p in 0..n {
                        let w = Vec3::new(xs[l], xs[m], xs[p]);
                        acc += ws[l] * ws[m] * ws[p] * h(v, w);
                    }
                }
            }
            acc * wv
        })
        .sum();

    let rmax = 3f64.sqrt() * extent;
    let rs: Vec<f64> = x.iter().map(|t| 0.5 * rmax * (t + 1.0)).collect();
    let wr: Vec<f64> = wx.iter().map(|t| 0.5 * rmax * t).collect();
    let (cs, wc) = gauss_legendre(n);
    let nphi = 2 * n;
    let mut dirs = Vec::with_capacity(n * nphi);
    for (c, w) in cs.iter().zip(&wc) {
        let st = (1.0 - c * c).sqrt();
        for q in 0..nphi {
            let ph = 2.0 * std::f64::consts::PI * q as f64 / nphi as f64;
            dirs.push((
                Vec3::new(st * ph.cos(), st * ph.sin(), *c),
                w * 2.0 * std::f64::consts::PI / nphi as f64,
            ));
        }
    }
    let frame: f64 = (0..n * n * n)
        .into_par_iter()
        .map(|a| {
            let (i, j, k) = (a / (n * n), (a / n) % n, a % n);
            let z = Vec3::new(xs[i], xs[j], xs[k]);
            let wz = ws[i] * ws[j] * ws[k];
            let mut acc = 0.0;
            for (r, w_r) in rs.iter().zip(&wr) {
                let jac = 8.0 * r * r * w_r;
                for (s, w_s) in &dirs {
                    let v = z + *s * *r;
                    let w = z - *s * *r;
                    acc += jac * w_s * h(v, w);
                }
            }
            acc * wz
        })
        .sum();
    (direct, frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pair_frame() {
        let f = to_frame(Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)).unwrap();
        assert_eq!(f.z, Vec3::ZERO);
        assert_eq!(f.r, 1.0);
        assert_eq!(f.sigma, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn coincident_pair_is_error() {
        let v = Vec3::new(0.3, -1.0, 2.0);
        assert_eq!(to_frame(v, v), Err(GeometryError::CoincidentVelocities));
    }

    #[test]
    fn head_on_rotation() {
        let f = to_frame(Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)).unwrap();
        let (a, b) = post_collision(&f, Vec3::new(0.0, 1.0, 0.0)).unwrap();
        assert_eq!(a, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(b, Vec3::new(0.0, -1.0, 0.0));
    }

    #[test]
    fn non_unit_sigma_rejected() {
        let f = to_frame(Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO).unwrap();
        assert!(matches!(
            post_collision(&f, Vec3::new(0.0, 1.0 + 1e-6, 0.0)),
            Err(GeometryError::NotUnit(_))
        ));
    }

    #[test]
    fn b3_of_e1_is_e2() {
        let b = b_field(3, Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(b, Vec3::new(0.0, 1.0, 0.0));
        assert!(b_field(4, Vec3::ZERO).is_err());
    }

    #[test]
    fn tangent_norm_when_other_is_zero() {
        let s = Vec3::new(0.0, 0.0, 1.0);
        let x = Vec3::new(0.4, -0.7, 0.0);
        let sp = Vec3::new(1.0, 0.0, 0.0);
        let d = tangent_diff_sq(x, Vec3::ZERO, s, sp).unwrap();
        assert!((d - x.norm_sq()).abs() < 1e-15);
        assert_eq!(tangent_diff_sq(x, x, s, s).unwrap(), 0.0);
    }

    #[test]
    fn non_tangent_rejected() {
        let s = Vec3::new(0.0, 0.0, 1.0);
        assert!(tangent_diff_sq(Vec3::new(0.0, 0.0, 0.1), Vec3::ZERO, s, s).is_err());
    }

    #[test]
    fn random_rotation_is_orthogonal() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let r = Mat3::random(&mut rng);
        let p = r.mul(&r.transpose());
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p.0[i][j] - e).abs() < 1e-14);
            }
        }
    }
}
