//! Pose and point-cloud metrics.

mod cloud;
mod kdtree;
mod pose;
mod profile;

pub use cloud::{acc_comp, center_alignment};
pub use kdtree::KdTree;
pub use pose::{
    accuracy_curves, maa30, relative_pose_errors, AccuracyCurves, PairError, PairwiseErrors, MAA_THRESHOLDS,
};
pub use profile::{depth_profile, terminal_error, view_errors, DepthError, ViewError};

use serde::Serialize;
use thiserror::Error;

use crate::geometry::Se3Pose;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("need at least two valid poses in both sets, found {0}")]
    TooFewPoses(usize),
    #[error("pose sets differ in size: {pred} predicted, {gt} ground truth")]
    SizeMismatch { pred: usize, gt: usize },
    #[error("empty point cloud")]
    EmptyCloud,
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub rra: [f64; 3],
    pub rta: [f64; 3],
    pub maa30: f64,
    pub valid_pairs: usize,
    pub excluded_pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comp: Option<f64>,
    pub depth_profile: Vec<DepthError>,
}

pub const REPORT_THRESHOLDS: [f64; 3] = [5.0, 10.0, 15.0];

/// Pose metrics, plus a depth profile against `reference` when depths are
/// known.
pub fn pose_report(
    pred: &[Option<Se3Pose<f64>>],
    gt: &[Se3Pose<f64>],
    depths: Option<(&[Option<usize>], usize)>,
) -> Result<MetricReport, EvalError> {
    let errs = relative_pose_errors(pred, gt)?;
    let curves = accuracy_curves(&errs, &REPORT_THRESHOLDS);
    let depth_profile = match depths {
        Some((d, reference)) => depth_profile(&view_errors(pred, gt, reference)?, d),
        None => Vec::new(),
    };
    Ok(MetricReport {
        rra: [curves.rra[0], curves.rra[1], curves.rra[2]],
        rta: [curves.rta[0], curves.rta[1], curves.rta[2]],
        maa30: maa30(&errs),
        valid_pairs: errs.valid_count(),
        excluded_pairs: errs.excluded,
        acc: None,
        comp: None,
        depth_profile,
    })
}
