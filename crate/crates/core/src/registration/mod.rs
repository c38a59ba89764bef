//! Incremental registration: bootstrap, layer-by-layer traversal of a
//! spanning forest with a per-view frame ledger, and PnP pose extraction.
//!
//! The global frame is the camera frame of the first tree's root.

mod align;
mod incremental;
mod plan;
mod poses;

pub use align::reconstruct_infer_then_align;
pub use incremental::reconstruct;
pub use plan::RegistrationPlan;
pub use poses::poses_from_pointmaps;

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    ConfidenceMap, GeometryError, Intrinsics, NormalizationParams, PnpOptions, PnpSolution, Pointmap, Se3Pose,
};
use crate::predictor::PredictorError;
use crate::view_graph::ViewId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistrationError {
    #[error("view {view}: {source}")]
    Predictor { view: ViewId, source: PredictorError },
    #[error("plan covers {plan} views but {images} images were supplied")]
    ImageCount { plan: usize, images: usize },
    #[error("at least two views are needed, got {0}")]
    TooFewViews(usize),
    #[error("bootstrap failed: {0}")]
    Bootstrap(GeometryError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegistrationOptions {
    /// Pixels with raw confidence below this are ignored by PnP.
    pub conf_threshold: f64,
    /// Overrides the focal length estimated from the root pointmap.
    pub focal: Option<f64>,
    pub pnp: PnpOptions,
}

impl Default for RegistrationOptions {
    fn default() -> Self {
        Self { conf_threshold: 0.0, focal: None, pnp: PnpOptions::default() }
    }
}

/// One registered view.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameLedgerEntry {
    pub view: ViewId,
    pub parent: Option<ViewId>,
    pub depth: usize,
    pub global_pointmap: Pointmap<f64>,
    pub raw_conf: ConfidenceMap<f64>,
    /// Statistics used when this view serves as a reference; `None` when its
    /// pointmap is degenerate, which blocks its subtree.
    pub norm: Option<NormalizationParams<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubtreeFailure {
    pub view: ViewId,
    pub reason: String,
    /// Descendants that were not registered because of this failure.
    pub skipped: Vec<ViewId>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub bootstrap: Duration,
    pub inference: Duration,
    pub poses: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    pub ledger: Vec<Option<FrameLedgerEntry>>,
    pub poses: Vec<Option<Se3Pose<f64>>>,
    pub pnp: Vec<Result<PnpSolution<f64>, GeometryError>>,
    pub intrinsics: Intrinsics<f64>,
    /// Pair used to place each tree's root, in tree order.
    pub bootstrap: Vec<(ViewId, ViewId)>,
    pub failures: Vec<SubtreeFailure>,
    pub predict_calls: usize,
    pub init_pair_calls: usize,
    pub timings: StageTimings,
}

impl ReconstructionResult {
    pub fn len(&self) -> usize {
        self.ledger.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ledger.is_empty()
    }

    pub fn is_partial(&self) -> bool {
        self.ledger.iter().any(Option::is_none)
    }

    pub fn entry(&self, v: ViewId) -> Option<&FrameLedgerEntry> {
        self.ledger[v].as_ref()
    }

    pub fn depths(&self) -> Vec<Option<usize>> {
        self.ledger.iter().map(|e| e.as_ref().map(|e| e.depth)).collect()
    }

    /// Mean raw confidence per tree depth over registered views.
    pub fn confidence_by_depth(&self) -> Vec<Option<f64>> {
        let mut sums: Vec<(f64, usize)> = Vec::new();
        for e in self.ledger.iter().flatten() {
            if sums.len() <= e.depth {
                sums.resize(e.depth + 1, (0.0, 0));
            }
            sums[e.depth].0 += e.raw_conf.mean();
            sums[e.depth].1 += 1;
        }
        sums.into_iter().map(|(s, n)| (n > 0).then(|| s / n as f64)).collect()
    }
}

/// Predictor geometry failures abort only the affected subtree; anything
/// else ends the run.
fn is_local_failure(e: &PredictorError) -> bool {
    matches!(e, PredictorError::Geometry(_))
}

fn finish(
    plan: &RegistrationPlan,
    ledger: Vec<Option<FrameLedgerEntry>>,
    mut failures: Vec<SubtreeFailure>,
) -> (Vec<Option<FrameLedgerEntry>>, Vec<SubtreeFailure>) {
    let children = plan.forest().children();
    for f in &mut failures {
        let mut stack = children[f.view].clone();
        while let Some(v) = stack.pop() {
            if ledger[v].is_none() {
                f.skipped.push(v);
            }
            stack.extend(children[v].iter().copied());
        }
        f.skipped.sort_unstable();
    }
    failures.sort_by_key(|f| f.view);
    (ledger, failures)
}
