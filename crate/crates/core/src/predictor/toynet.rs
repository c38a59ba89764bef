use nalgebra::Vector3;

use super::{PairPrediction, PredictorError, PredictorRequest, PredictorResponse, StereoPredictor, ViewInput};
use crate::geometry::{apply_normalization, normalization_params, ConfidenceMap, Pointmap};
use crate::stereo_model::{toy_forward, ToyInputs, ToyNetConfig, ToyNetWeights};

/// Runs the forward-only toy network as a predictor. Outputs carry no
/// geometric meaning beyond the shape and positivity contracts.
pub struct ToyNetPredictor {
    weights: ToyNetWeights<f64>,
}

impl ToyNetPredictor {
    pub fn new(cfg: ToyNetConfig, seed: u64) -> Self {
        Self { weights: ToyNetWeights::random(cfg, seed) }
    }

    pub fn config(&self) -> &ToyNetConfig {
        self.weights.config()
    }
}

/// Unit-depth rays with focal = image width, used as the reference pointmap
/// of the bootstrap pass.
fn ray_grid(width: usize, height: usize) -> Pointmap<f64> {
    let f = width as f64;
    Pointmap::from_fn(width, height, |col, row| {
        let u = (col as f64 + 0.5 - width as f64 / 2.0) / f;
        let v = (row as f64 + 0.5 - height as f64 / 2.0) / f;
        Some(Vector3::new(u, v, 1.0))
    })
}

impl StereoPredictor for ToyNetPredictor {
    fn init_pair(&self, a: ViewInput<'_>, b: ViewInput<'_>) -> Result<PairPrediction, PredictorError> {
        let (w, h) = (a.image.width(), a.image.height());
        let rays = ray_grid(w, h);
        let norm = normalization_params(&rays)?;
        let reference = apply_normalization(&rays, &norm);
        let conf = vec![0.5; w * h];
        let (b_norm, b_conf) = toy_forward(
            &self.weights,
            &ToyInputs { ref_image: a.image, ref_pointmap: &reference, ref_conf_squashed: &conf, tgt_image: b.image },
        )?;
        let back = norm.as_sim3().inverse();
        Ok(PairPrediction {
            a_pointmap: rays,
            a_conf: ConfidenceMap::uniform(w, h, 1.0),
            b_pointmap: back.apply_pointmap(&b_norm),
            b_conf,
        })
    }

    fn predict(&self, req: &PredictorRequest<'_>) -> Result<PredictorResponse, PredictorError> {
        req.validate()?;
        let (tgt_pointmap, tgt_conf) = toy_forward(
            &self.weights,
            &ToyInputs {
                ref_image: req.ref_image,
                ref_pointmap: req.ref_pointmap,
                ref_conf_squashed: req.ref_conf_squashed,
                tgt_image: req.tgt_image,
            },
        )?;
        Ok(PredictorResponse { tgt_pointmap, tgt_conf })
    }
}
