//! Core numeric types and transforms.
//!
//! Pose convention, used everywhere in this crate: a [`Se3Pose`] stores the
//! camera-to-world rotation and the camera center in world coordinates, so a
//! world point `p` maps to camera coordinates as `Rᵀ (p − c)`. Cameras look
//! down `+z` with `x` right and `y` down. Pixel `(col, row)` has its center at
//! `(col + 0.5, row + 0.5)`.

mod focal;
mod normalize;
mod pnp;
mod pointmap;
mod rotation;
mod transform;
mod umeyama;

pub use focal::estimate_focal;
pub use normalize::{apply_denormalization, apply_normalization, normalization_params, NormalizationParams};
pub use pnp::{solve_pnp, solve_pnp_with, PnpOptions, PnpSolution, RansacOptions};
pub use pointmap::{ConfidenceMap, Pointmap};
pub use rotation::{random_rotation_uniform, rotation_geodesic_sq, Rotation};
pub use transform::{Intrinsics, Se3Pose, Sim3Transform};
pub use umeyama::{umeyama_sim3, weighted_alignment_cost};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate pointmap: {0}")]
    DegeneratePointmap(&'static str),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("insufficient correspondences: {found} usable, {required} required")]
    InsufficientCorrespondences { found: usize, required: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
}
