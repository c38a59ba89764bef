use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use super::EvalError;
use crate::geometry::Se3Pose;
use crate::view_graph::ViewId;

/// Integer thresholds, in degrees, averaged by [`maa30`].
pub const MAA_THRESHOLDS: std::ops::RangeInclusive<u32> = 1..=30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairError {
    pub i: ViewId,
    pub j: ViewId,
    pub rotation_deg: f64,
    pub translation_deg: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairwiseErrors {
    /// Every unordered pair `i < j` in lexicographic order.
    pub pairs: Vec<PairError>,
    /// Pairs skipped because a pose is missing.
    pub excluded: usize,
}

impl PairwiseErrors {
    pub fn valid(&self) -> impl Iterator<Item = &PairError> {
        self.pairs.iter().filter(|p| p.valid)
    }

    pub fn valid_count(&self) -> usize {
        self.valid().count()
    }
}

pub(crate) fn angle_between_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 && nb == 0.0 {
        return 0.0;
    }
    if na == 0.0 || nb == 0.0 {
        return 180.0;
    }
    a.cross(b).norm().atan2(a.dot(b)).to_degrees()
}

/// Rotation and translation-direction errors of `pred` against `gt` for
/// one ordered pair, both expressed in view `i`'s frame.
pub(crate) fn pair_error(pi: &Se3Pose<f64>, pj: &Se3Pose<f64>, gi: &Se3Pose<f64>, gj: &Se3Pose<f64>) -> (f64, f64) {
    let rel_pred = pi.relative(pj);
    let rel_gt = gi.relative(gj);
    let rot = (rel_gt.rotation.transpose() * rel_pred.rotation).angle().to_degrees();
    (rot, angle_between_deg(&rel_pred.center, &rel_gt.center))
}

pub fn relative_pose_errors(pred: &[Option<Se3Pose<f64>>], gt: &[Se3Pose<f64>]) -> Result<PairwiseErrors, EvalError> {
    if pred.len() != gt.len() {
        return Err(EvalError::SizeMismatch { pred: pred.len(), gt: gt.len() });
    }
    let usable = pred.iter().flatten().count();
    if usable < 2 {
        return Err(EvalError::TooFewPoses(usable));
    }
    let n = gt.len();
    let pairs: Vec<PairError> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| match (pred[i], pred[j]) {
            (Some(pi), Some(pj)) => {
                let (rotation_deg, translation_deg) = pair_error(&pi, &pj, &gt[i], &gt[j]);
                PairError { i, j, rotation_deg, translation_deg, valid: true }
            }
            _ => PairError { i, j, rotation_deg: f64::NAN, translation_deg: f64::NAN, valid: false },
        })
        .collect();
    let excluded = pairs.iter().filter(|p| !p.valid).count();
    Ok(PairwiseErrors { pairs, excluded })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccuracyCurves {
    pub thresholds: Vec<f64>,
    pub rra: Vec<f64>,
    pub rta: Vec<f64>,
}

/// Fraction of valid pairs with error strictly below each threshold.
pub fn accuracy_curves(errs: &PairwiseErrors, thresholds: &[f64]) -> AccuracyCurves {
    let n = errs.valid_count();
    let frac = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };
    let mut rra = Vec::with_capacity(thresholds.len());
    let mut rta = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        rra.push(frac(errs.valid().filter(|p| p.rotation_deg < t).count()));
        rta.push(frac(errs.valid().filter(|p| p.translation_deg < t).count()));
    }
    AccuracyCurves { thresholds: thresholds.to_vec(), rra, rta }
}

/// Mean over τ = 1..30 degrees of `min(RRA@τ, RTA@τ)`.
pub fn maa30(errs: &PairwiseErrors) -> f64 {
    let thresholds: Vec<f64> = MAA_THRESHOLDS.map(f64::from).collect();
    let c = accuracy_curves(errs, &thresholds);
    c.rra.iter().zip(&c.rta).map(|(r, t)| r.min(*t)).sum::<f64>() / thresholds.len() as f64
}
