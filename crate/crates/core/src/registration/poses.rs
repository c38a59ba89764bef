use rayon::prelude::*;

use super::{FrameLedgerEntry, RegistrationOptions};
use crate::geometry::{solve_pnp_with, GeometryError, Intrinsics, PnpSolution, Se3Pose};
use crate::view_graph::ViewId;

/// Confidence-weighted PnP per registered view; the global root is the
/// identity by construction.
pub fn poses_from_pointmaps(
    ledger: &[Option<FrameLedgerEntry>],
    intrinsics: &Intrinsics<f64>,
    root: ViewId,
    opts: &RegistrationOptions,
) -> Vec<Result<PnpSolution<f64>, GeometryError>> {
    ledger
        .par_iter()
        .enumerate()
        .map(|(v, e)| {
            let e = e.as_ref().ok_or_else(|| GeometryError::InvalidValue(format!("view {v} is not registered")))?;
            if v == root {
                return Ok(PnpSolution {
                    pose: Se3Pose::identity(),
                    converged: true,
                    iterations: 0,
                    rms_reprojection_px: 0.0,
                    correspondences: e.global_pointmap.valid_count(),
                });
            }
            solve_pnp_with(&e.global_pointmap, &e.raw_conf, intrinsics, opts.conf_threshold, &opts.pnp)
        })
        .collect()
}
