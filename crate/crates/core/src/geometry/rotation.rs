use std::ops::Mul;

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use rand::Rng;

use super::GeometryError;
use crate::scalar::Real;

/// A 3×3 rotation matrix (orthonormal, determinant +1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation<T: Real>(Matrix3<T>);

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Wraps `m` after checking `‖mᵀm − I‖ < tol` and `|det m − 1| < tol`.
    pub fn from_matrix(m: Matrix3<T>) -> Result<Self, GeometryError> {
        let tol = T::structural_tol();
        let ortho = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if ortho < tol && (det - T::one()).abs() <= tol {
            Ok(Self(m))
        } else {
            Err(GeometryError::InvalidValue(format!(
                "not a rotation: orthogonality error {ortho:?}, det {det:?}"
            )))
        }
    }

    pub fn from_matrix_unchecked(m: Matrix3<T>) -> Self {
        Self(m)
    }

    /// Nearest rotation in Frobenius norm (SVD projection onto SO(3)).
    pub fn project(m: &Matrix3<T>) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let mut fix = Matrix3::identity();
        if (u * v_t).determinant() < T::zero() {
            fix[(2, 2)] = -T::one();
        }
        Self(u * fix * v_t)
    }

    /// Exponential map of an axis-angle vector.
    pub fn exp(omega: &Vector3<T>) -> Self {
        Self(Rotation3::new(*omega).into_inner())
    }

    /// Logarithm map: the axis-angle vector with angle in `[0, π]`.
    pub fn log(&self) -> Vector3<T> {
        let mut q = self.quaternion();
        if q.w < T::zero() {
            q = UnitQuaternion::new_unchecked(-q.into_inner());
        }
        let v = q.imag();
        let n = v.norm();
        if n <= T::default_epsilon() {
            return v * T::lit(2.0);
        }
        let angle = T::lit(2.0) * n.atan2(q.w);
        v * (angle / n)
    }

    /// Rotation angle in radians, `[0, π]`.
    pub fn angle(&self) -> T {
        let q = self.quaternion();
        T::lit(2.0) * q.imag().norm().atan2(q.w.abs())
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn apply(&self, v: &Vector3<T>) -> Vector3<T> {
        self.0 * v
    }

    fn quaternion(&self) -> UnitQuaternion<T> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.0))
    }

    /// Unit quaternion `[w, x, y, z]` with `w ≥ 0`.
    pub fn to_quaternion_wxyz(&self) -> [T; 4] {
        let q = self.quaternion();
        let s = if q.w < T::zero() { -T::one() } else { T::one() };
        [q.w * s, q.i * s, q.j * s, q.k * s]
    }

    /// Builds a rotation from `[w, x, y, z]`; the quaternion norm must be
    /// within the structural tolerance of 1.
    pub fn from_quaternion_wxyz(q: [T; 4]) -> Result<Self, GeometryError> {
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let norm = quat.norm();
        if (norm - T::one()).abs() > T::structural_tol() {
            return Err(GeometryError::InvalidValue(format!("quaternion norm {norm:?}")));
        }
        let uq = UnitQuaternion::new_normalize(quat);
        Ok(Self(uq.to_rotation_matrix().into_inner()))
    }

    pub fn cast<U: Real>(&self) -> Rotation<U> {
        Rotation(self.0.map(|v| U::lit(v.as_f64())))
    }
}

impl<T: Real> Mul for Rotation<T> {
    type Output = Rotation<T>;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl<T: Real> Mul<&Rotation<T>> for &Rotation<T> {
    type Output = Rotation<T>;
    fn mul(self, rhs: &Rotation<T>) -> Rotation<T> {
        Rotation(self.0 * rhs.0)
    }
}

/// Squared geodesic distance `‖log(aᵀb)‖²` (the relative angle squared).
pub fn rotation_geodesic_sq<T: Real>(a: &Rotation<T>, b: &Rotation<T>) -> T {
    let theta = (a.transpose() * *b).angle();
    theta * theta
}

/// Draws a rotation uniformly from SO(3) (Haar measure) via a uniform unit
/// quaternion built from three uniform variates.
pub fn random_rotation_uniform<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Rotation<T> {
    use std::f64::consts::TAU;
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let (x, y) = (a * (TAU * u2).sin(), a * (TAU * u2).cos());
    let (z, w) = (b * (TAU * u3).sin(), b * (TAU * u3).cos());
    let q = UnitQuaternion::new_normalize(Quaternion::new(w, x, y, z));
    Rotation(q.to_rotation_matrix().into_inner().map(T::lit))
}
