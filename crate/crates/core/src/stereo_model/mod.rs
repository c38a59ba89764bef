//! Model-side mathematics: confidence squashing, the confidence-aware
//! regression loss, and a small forward-only two-stream transformer.

mod loss;
mod toynet;

pub use loss::{
    confidence_loss, regression_loss, squash_confidence, symmetric_loss, ConfidenceLoss, Direction, LossConfig,
};
pub use toynet::{
    toy_forward, toy_forward_traced, ToyInputs, ToyNetConfig, ToyNetWeights, ToyTrace, REF_CHANNELS, TGT_CHANNELS,
};
