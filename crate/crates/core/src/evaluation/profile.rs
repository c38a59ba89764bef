use serde::Serialize;

use super::pose::pair_error;
use super::EvalError;
use crate::geometry::Se3Pose;
use crate::view_graph::ViewId;

/// Error of one view's pose relative to a reference view.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ViewError {
    pub rotation_deg: f64,
    pub translation_deg: f64,
}

impl ViewError {
    /// A pose counts as accurate at `τ` only when both errors are below it.
    pub fn pose_deg(&self) -> f64 {
        self.rotation_deg.max(self.translation_deg)
    }
}

/// Per-view error of the relative pose from `reference` to the view. The
/// reference itself scores zero; views missing in either set give `None`.
pub fn view_errors(
    pred: &[Option<Se3Pose<f64>>],
    gt: &[Se3Pose<f64>],
    reference: ViewId,
) -> Result<Vec<Option<ViewError>>, EvalError> {
    if pred.len() != gt.len() {
        return Err(EvalError::SizeMismatch { pred: pred.len(), gt: gt.len() });
    }
    let Some(pr) = pred.get(reference).copied().flatten() else {
        return Err(EvalError::TooFewPoses(0));
    };
    Ok(pred
        .iter()
        .enumerate()
        .map(|(v, p)| {
            let p = (*p)?;
            if v == reference {
                return Some(ViewError { rotation_deg: 0.0, translation_deg: 0.0 });
            }
            let (rotation_deg, translation_deg) = pair_error(&pr, &p, &gt[reference], &gt[v]);
            Some(ViewError { rotation_deg, translation_deg })
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DepthError {
    pub depth: usize,
    pub views: usize,
    pub rotation_deg: f64,
    pub translation_deg: f64,
    pub pose_deg: f64,
}

/// Mean errors grouped by tree depth, one entry per depth that has at least
/// one evaluated view.
pub fn depth_profile(errors: &[Option<ViewError>], depths: &[Option<usize>]) -> Vec<DepthError> {
    let max = depths.iter().flatten().copied().max().unwrap_or(0);
    let mut acc = vec![(0usize, 0.0, 0.0, 0.0); max + 1];
    for (e, d) in errors.iter().zip(depths) {
        if let (Some(e), Some(d)) = (e, d) {
            let a = &mut acc[*d];
            a.0 += 1;
            a.1 += e.rotation_deg;
            a.2 += e.translation_deg;
            a.3 += e.pose_deg();
        }
    }
    acc.into_iter()
        .enumerate()
        .filter(|(_, a)| a.0 > 0)
        .map(|(depth, (n, r, t, p))| {
            let k = n as f64;
            DepthError { depth, views: n, rotation_deg: r / k, translation_deg: t / k, pose_deg: p / k }
        })
        .collect()
}

/// Profile entry at the deepest evaluated layer.
pub fn terminal_error(profile: &[DepthError]) -> Option<DepthError> {
    profile.last().copied()
}
