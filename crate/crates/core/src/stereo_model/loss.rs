use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{ConfidenceMap, GeometryError, Pointmap};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub alpha: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

/// `σ(log c) = c / (1 + c)` per pixel.
pub fn squash_confidence<T: Real>(c: &ConfidenceMap<T>) -> Vec<T> {
    c.values().iter().map(|v| *v / (T::one() + *v)).collect()
}

/// Per-pixel `‖pred − gt‖`; zero wherever either map is invalid.
pub fn regression_loss<T: Real>(pred: &Pointmap<T>, gt: &Pointmap<T>) -> Result<Vec<T>, GeometryError> {
    if !pred.same_shape(gt) {
        return Err(GeometryError::ShapeMismatch("prediction and ground truth differ in size".into()));
    }
    Ok((0..pred.len())
        .map(|i| match (pred.point(i), gt.point(i)) {
            (Some(p), Some(g)) => (p - g).norm(),
            _ => T::zero(),
        })
        .collect())
}

/// Loss value with gradients with respect to every predicted point and
/// confidence (zero on pixels excluded from the reduction).
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceLoss<T: Real> {
    pub value: T,
    pub grad_pred: Vec<Vector3<T>>,
    pub grad_conf: Vec<T>,
    pub pixels: usize,
}

/// Mean over pixels valid in both maps of `c‖Δ‖ − α log c`.
pub fn confidence_loss<T: Real>(
    pred: &Pointmap<T>,
    conf: &ConfidenceMap<T>,
    gt: &Pointmap<T>,
    cfg: &LossConfig,
) -> Result<ConfidenceLoss<T>, GeometryError> {
    if !pred.same_shape(gt) || !conf.matches(pred) {
        return Err(GeometryError::ShapeMismatch("loss inputs differ in size".into()));
    }
    if !(cfg.alpha >= 0.0) {
        return Err(GeometryError::InvalidValue(format!("alpha {}", cfg.alpha)));
    }
    let alpha = T::lit(cfg.alpha);
    let used: Vec<usize> = (0..pred.len()).filter(|i| pred.is_valid(*i) && gt.is_valid(*i)).collect();
    if used.is_empty() {
        return Err(GeometryError::DegeneratePointmap("no pixel valid in both maps"));
    }
    let inv_n = T::one() / T::lit(used.len() as f64);
    let mut value = T::zero();
    let mut grad_pred = vec![Vector3::zeros(); pred.len()];
    let mut grad_conf = vec![T::zero(); pred.len()];
    for i in used.iter().copied() {
        let delta = pred.xyz()[i] - gt.xyz()[i];
        let norm = delta.norm();
        let c = conf.values()[i];
        value += c * norm - alpha * c.ln();
        if norm > T::zero() {
            grad_pred[i] = delta * (c / norm * inv_n);
        }
        grad_conf[i] = (norm - alpha / c) * inv_n;
    }
    Ok(ConfidenceLoss { value: value * inv_n, grad_pred, grad_conf, pixels: used.len() })
}

/// One direction of a symmetric pair: prediction, its confidence, and the
/// normalized ground truth it is compared against.
pub struct Direction<'a, T: Real> {
    pub pred: &'a Pointmap<T>,
    pub conf: &'a ConfidenceMap<T>,
    pub gt: &'a Pointmap<T>,
}

/// Sum of both directional confidence losses.
pub fn symmetric_loss<T: Real>(ij: &Direction<T>, ji: &Direction<T>, cfg: &LossConfig) -> Result<T, GeometryError> {
    Ok(confidence_loss(ij.pred, ij.conf, ij.gt, cfg)?.value + confidence_loss(ji.pred, ji.conf, ji.gt, cfg)?.value)
}
