//! Synthetic scenes built from analytic surfaces, with exact ground truth.

mod overlap;
mod presets;
mod primitives;
mod render;

pub use overlap::overlap_similarity;
pub use presets::{look_at, make_scene, make_scene_with, ScenePreset, SceneOptions};
pub use primitives::{Primitive, Surface};
pub use render::{render_view, RenderedView};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Intrinsics, Se3Pose};
use crate::view_graph::SimilarityMatrix;

/// Minimum fraction of pixels each camera must see geometry in.
pub const MIN_COVERAGE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("unknown preset '{0}' (expected orbit, grid or line)")]
    InvalidPreset(String),
    #[error("need at least 2 views, got {0}")]
    TooFewViews(usize),
    #[error("view {view} sees geometry in only {fraction:.3} of its pixels")]
    InsufficientCoverage { view: usize, fraction: f64 },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticScene {
    pub primitives: Vec<Primitive>,
    /// Radius of a ball around the origin containing every bounded surface.
    pub extent: f64,
}

impl SyntheticScene {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self, SceneError> {
        if primitives.is_empty() {
            return Err(SceneError::InvalidScene("no primitives".into()));
        }
        let extent = primitives
            .iter()
            .map(|p| p.surface.bounding_radius())
            .filter(|r| r.is_finite())
            .fold(1.0f64, f64::max);
        Ok(Self { primitives, extent })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Orbit,
    Grid,
    Line,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CameraTrajectory {
    pub kind: TrajectoryKind,
    pub poses: Vec<Se3Pose<f64>>,
    pub intrinsics: Intrinsics<f64>,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub intrinsics: Intrinsics<f64>,
    pub views: Vec<ViewTruth>,
    pub overlap: SimilarityMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViewTruth {
    pub pose: Se3Pose<f64>,
    pub render: RenderedView,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn poses(&self) -> Vec<Se3Pose<f64>> {
        self.views.iter().map(|v| v.pose).collect()
    }
}

/// Everything [`make_scene`] produces.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneBundle {
    pub scene: SyntheticScene,
    pub trajectory: CameraTrajectory,
    pub truth: GroundTruth,
}
