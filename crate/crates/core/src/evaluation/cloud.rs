use nalgebra::Vector3;
use rayon::prelude::*;

use super::{EvalError, KdTree};
use crate::geometry::{umeyama_sim3, Se3Pose, Sim3Transform};

/// Similarity taking predicted camera centers onto ground-truth ones, fitted
/// on views posed in both sets.
pub fn center_alignment(pred: &[Option<Se3Pose<f64>>], gt: &[Se3Pose<f64>]) -> Result<Sim3Transform<f64>, EvalError> {
    if pred.len() != gt.len() {
        return Err(EvalError::SizeMismatch { pred: pred.len(), gt: gt.len() });
    }
    let (src, dst): (Vec<_>, Vec<_>) =
        pred.iter().zip(gt).filter_map(|(p, g)| p.map(|p| (p.center, g.center))).unzip();
    Ok(umeyama_sim3(&src, &dst, &vec![1.0; src.len()])?)
}

fn mean_nearest(from: &[Vector3<f64>], to: &KdTree) -> f64 {
    let sum: f64 = from.par_iter().map(|p| to.nearest(p).expect("non-empty").1).sum();
    sum / from.len() as f64
}

/// Accuracy (predicted → ground truth) and completion (ground truth →
/// predicted) mean nearest-neighbour distances. Both clouds must already
/// share a frame.
pub fn acc_comp(pred: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<(f64, f64), EvalError> {
    if pred.is_empty() || gt.is_empty() {
        return Err(EvalError::EmptyCloud);
    }
    let gt_tree = KdTree::new(gt.to_vec());
    let pred_tree = KdTree::new(pred.to_vec());
    Ok((mean_nearest(pred, &gt_tree), mean_nearest(gt, &pred_tree)))
}
