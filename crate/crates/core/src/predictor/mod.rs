//! The stereo predictor contract and its implementations.
//!
//! A predictor receives a reference view (image, pointmap in the caller's
//! normalized frame, squashed confidence) and a target image, and returns the
//! target pointmap expressed in the same frame as the supplied reference.

mod counting;
mod external;
mod oracle;
mod toynet;
pub mod wire;

pub use counting::CountingPredictor;
pub use external::ExternalPredictor;
pub use wire::WireClient;
pub use oracle::{oracle_confidence, oracle_frame_recovery, OracleNoiseConfig, OraclePredictor};
pub use toynet::ToyNetPredictor;

use thiserror::Error;

use crate::geometry::{normalization_params, ConfidenceMap, GeometryError, Pointmap};
use crate::image::RgbImage;
use crate::view_graph::ViewId;

/// Tolerance on the normalized-frame invariant of a request.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictorError {
    #[error("unknown view {0}")]
    UnknownView(ViewId),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("predictor reported: {0}")]
    Remote(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug)]
pub struct ViewInput<'a> {
    pub id: ViewId,
    pub image: &'a RgbImage,
}

#[derive(Clone, Copy, Debug)]
pub struct PredictorRequest<'a> {
    pub ref_view_id: ViewId,
    pub tgt_view_id: ViewId,
    pub ref_image: &'a RgbImage,
    pub ref_pointmap: &'a Pointmap<f64>,
    pub ref_conf_squashed: &'a [f64],
    pub tgt_image: &'a RgbImage,
}

impl PredictorRequest<'_> {
    /// Checks shapes, the `(0, 1)` range of squashed confidences and that the
    /// reference pointmap is centered with unit mean radius.
    pub fn validate(&self) -> Result<(), PredictorError> {
        let (w, h) = (self.ref_pointmap.width(), self.ref_pointmap.height());
        if self.ref_image.width() != w || self.ref_image.height() != h || self.ref_conf_squashed.len() != w * h {
            return Err(PredictorError::InvalidRequest("reference inputs differ in size".into()));
        }
        if self.ref_conf_squashed.iter().any(|c| !(*c > 0.0 && *c < 1.0)) {
            return Err(PredictorError::InvalidRequest("squashed confidence outside (0, 1)".into()));
        }
        let params = normalization_params(self.ref_pointmap)?;
        if params.mu.norm() > NORMALIZATION_TOLERANCE || (params.z - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(PredictorError::InvalidRequest(format!(
                "reference pointmap is not normalized (centroid {:.3e}, radius {})",
                params.mu.norm(),
                params.z
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictorResponse {
    pub tgt_pointmap: Pointmap<f64>,
    pub tgt_conf: ConfidenceMap<f64>,
}

/// Bootstrap output: both pointmaps in view `a`'s camera frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPrediction {
    pub a_pointmap: Pointmap<f64>,
    pub a_conf: ConfidenceMap<f64>,
    pub b_pointmap: Pointmap<f64>,
    pub b_conf: ConfidenceMap<f64>,
}

/// Shared by concurrent callers; implementations must not interleave state
/// between calls.
pub trait StereoPredictor: Send + Sync {
    fn init_pair(&self, a: ViewInput<'_>, b: ViewInput<'_>) -> Result<PairPrediction, PredictorError>;
    fn predict(&self, req: &PredictorRequest<'_>) -> Result<PredictorResponse, PredictorError>;
}

impl<P: StereoPredictor + ?Sized> StereoPredictor for &P {
    fn init_pair(&self, a: ViewInput<'_>, b: ViewInput<'_>) -> Result<PairPrediction, PredictorError> {
        (**self).init_pair(a, b)
    }
    fn predict(&self, req: &PredictorRequest<'_>) -> Result<PredictorResponse, PredictorError> {
        (**self).predict(req)
    }
}

impl<P: StereoPredictor + ?Sized> StereoPredictor for Box<P> {
    fn init_pair(&self, a: ViewInput<'_>, b: ViewInput<'_>) -> Result<PairPrediction, PredictorError> {
        (**self).init_pair(a, b)
    }
    fn predict(&self, req: &PredictorRequest<'_>) -> Result<PredictorResponse, PredictorError> {
        (**self).predict(req)
    }
}
