use nalgebra::Vector3;

use super::{GeometryError, Pointmap, Rotation};
use crate::scalar::Real;

/// Camera pose: camera-to-world rotation and camera center in world units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Se3Pose<T: Real> {
    pub rotation: Rotation<T>,
    pub center: Vector3<T>,
}

impl<T: Real> Se3Pose<T> {
    pub fn new(rotation: Rotation<T>, center: Vector3<T>) -> Self {
        Self { rotation, center }
    }

    pub fn identity() -> Self {
        Self { rotation: Rotation::identity(), center: Vector3::zeros() }
    }

    /// `Rᵀ (p − c)`.
    pub fn world_to_camera(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation.matrix().tr_mul(&(p - self.center))
    }

    /// `R p + c`.
    pub fn camera_to_world(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation.apply(p) + self.center
    }

    /// The camera-to-world map as a similarity with unit scale.
    pub fn camera_to_world_sim3(&self) -> Sim3Transform<T> {
        Sim3Transform { scale: T::one(), rotation: self.rotation, translation: self.center }
    }

    pub fn world_to_camera_sim3(&self) -> Sim3Transform<T> {
        self.camera_to_world_sim3().inverse()
    }

    /// Pose of `other` expressed in this camera's frame.
    pub fn relative(&self, other: &Se3Pose<T>) -> Se3Pose<T> {
        Se3Pose {
            rotation: self.rotation.transpose() * other.rotation,
            center: self.world_to_camera(&other.center),
        }
    }

    pub fn cast<U: Real>(&self) -> Se3Pose<U> {
        Se3Pose { rotation: self.rotation.cast(), center: self.center.map(|v| U::lit(v.as_f64())) }
    }
}

/// Similarity `x ↦ s R x + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sim3Transform<T: Real> {
    pub scale: T,
    pub rotation: Rotation<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> Sim3Transform<T> {
    pub fn new(scale: T, rotation: Rotation<T>, translation: Vector3<T>) -> Result<Self, GeometryError> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(GeometryError::InvalidValue(format!("similarity scale {scale:?}")));
        }
        Ok(Self { scale, rotation, translation })
    }

    pub fn identity() -> Self {
        Self { scale: T::one(), rotation: Rotation::identity(), translation: Vector3::zeros() }
    }

    pub fn apply(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rotation.apply(p) * self.scale + self.translation
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Sim3Transform<T>) -> Self {
        Self {
            scale: self.scale * other.scale,
            rotation: self.rotation * other.rotation,
            translation: self.rotation.apply(&other.translation) * self.scale + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let inv_s = T::one() / self.scale;
        let r_t = self.rotation.transpose();
        Self { scale: inv_s, rotation: r_t, translation: -(r_t.apply(&self.translation) * inv_s) }
    }

    pub fn apply_pointmap(&self, pm: &Pointmap<T>) -> Pointmap<T> {
        pm.map_valid(|p| self.apply(p))
    }

    /// Maps a camera pose through the similarity (rotation composes, center
    /// moves as a point).
    pub fn apply_pose(&self, pose: &Se3Pose<T>) -> Se3Pose<T> {
        Se3Pose { rotation: self.rotation * pose.rotation, center: self.apply(&pose.center) }
    }
}

/// Pinhole intrinsics shared by every view.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intrinsics<T: Real> {
    pub focal: T,
    pub cx: T,
    pub cy: T,
}

impl<T: Real> Intrinsics<T> {
    pub fn new(focal: T, cx: T, cy: T) -> Result<Self, GeometryError> {
        if !(focal > T::zero() && focal.is_finite()) {
            return Err(GeometryError::InvalidValue(format!("focal {focal:?}")));
        }
        Ok(Self { focal, cx, cy })
    }

    /// Principal point at the image center.
    pub fn centered(focal: T, width: usize, height: usize) -> Result<Self, GeometryError> {
        Self::new(focal, T::lit(width as f64 / 2.0), T::lit(height as f64 / 2.0))
    }

    /// Projects a camera-frame point; `None` when it is not in front.
    pub fn project(&self, p: &Vector3<T>) -> Option<(T, T)> {
        (p.z > T::zero()).then(|| (self.focal * p.x / p.z + self.cx, self.focal * p.y / p.z + self.cy))
    }

    /// Camera-frame ray `(x, y, 1)` through pixel position `(u, v)`.
    pub fn ray(&self, u: T, v: T) -> Vector3<T> {
        Vector3::new((u - self.cx) / self.focal, (v - self.cy) / self.focal, T::one())
    }
}
