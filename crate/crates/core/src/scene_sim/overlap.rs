use rayon::prelude::*;

use super::ViewTruth;
use crate::geometry::Intrinsics;
use crate::view_graph::SimilarityMatrix;

/// Relative depth disagreement tolerated when testing co-visibility.
const DEPTH_TOLERANCE: f64 = 0.01;

/// `sim(i, j)`: average over both directions of the fraction of one view's
/// valid pixels whose 3D point lands on a pixel of the other view with a
/// consistent depth there.
pub fn overlap_similarity(views: &[ViewTruth], k: &Intrinsics<f64>) -> SimilarityMatrix {
    let n = views.len();
    let directed: Vec<Vec<f64>> =
        (0..n).into_par_iter().map(|i| (0..n).map(|j| visible_fraction(&views[i], &views[j], k)).collect()).collect();
    SimilarityMatrix::from_fn(n, |i, j| 0.5 * (directed[i][j] + directed[j][i]))
        .expect("fractions lie in [0, 1]")
}

fn visible_fraction(from: &ViewTruth, to: &ViewTruth, k: &Intrinsics<f64>) -> f64 {
    let total = from.render.world.valid_count();
    if total == 0 {
        return 0.0;
    }
    let (w, h) = (to.render.camera.width(), to.render.camera.height());
    let seen = from
        .render
        .world
        .iter_valid()
        .filter(|(_, p)| {
            let pc = to.pose.world_to_camera(p);
            let Some((u, v)) = k.project(&pc) else { return false };
            if !(u >= 0.0 && v >= 0.0 && u < w as f64 && v < h as f64) {
                return false;
            }
            let d = to.render.depth[v as usize * w + u as usize];
            d.is_finite() && (d - pc.z).abs() <= DEPTH_TOLERANCE * pc.z
        })
        .count();
    seen as f64 / total as f64
}
