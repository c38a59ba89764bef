use nalgebra::Vector3;

use super::{GeometryError, Pointmap, Rotation, Sim3Transform};
use crate::scalar::Real;

/// Centroid and mean distance to the centroid of a reference pointmap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizationParams<T: Real> {
    pub mu: Vector3<T>,
    pub z: T,
}

impl<T: Real> NormalizationParams<T> {
    pub fn identity() -> Self {
        Self { mu: Vector3::zeros(), z: T::one() }
    }

    /// `x ↦ (x − μ) / z` as a similarity.
    pub fn as_sim3(&self) -> Sim3Transform<T> {
        let inv = T::one() / self.z;
        Sim3Transform { scale: inv, rotation: Rotation::identity(), translation: -self.mu * inv }
    }

    pub fn normalize_point(&self, p: &Vector3<T>) -> Vector3<T> {
        (p - self.mu) / self.z
    }

    pub fn denormalize_point(&self, p: &Vector3<T>) -> Vector3<T> {
        p * self.z + self.mu
    }
}

/// Mean of the valid points and their mean Euclidean distance to it.
pub fn normalization_params<T: Real>(pm: &Pointmap<T>) -> Result<NormalizationParams<T>, GeometryError> {
    let n = pm.valid_count();
    if n == 0 {
        return Err(GeometryError::DegeneratePointmap("no valid pixels"));
    }
    let count = T::lit(n as f64);
    let mu = pm.iter_valid().fold(Vector3::zeros(), |acc, (_, p)| acc + p) / count;
    let z = pm.iter_valid().fold(T::zero(), |acc, (_, p)| acc + (p - mu).norm()) / count;
    if !(z >= T::lit(1e-12)) {
        return Err(GeometryError::DegeneratePointmap("all valid points coincide"));
    }
    Ok(NormalizationParams { mu, z })
}

pub fn apply_normalization<T: Real>(pm: &Pointmap<T>, params: &NormalizationParams<T>) -> Pointmap<T> {
    pm.map_valid(|p| params.normalize_point(p))
}

pub fn apply_denormalization<T: Real>(pm: &Pointmap<T>, params: &NormalizationParams<T>) -> Pointmap<T> {
    pm.map_valid(|p| params.denormalize_point(p))
}
