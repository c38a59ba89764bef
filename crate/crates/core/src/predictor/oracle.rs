use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    PairPrediction, PredictorError, PredictorRequest, PredictorResponse, StereoPredictor, ViewInput,
};
use crate::geometry::{
    normalization_params, umeyama_sim3, ConfidenceMap, GeometryError, Pointmap, Rotation, Sim3Transform,
};
use crate::scene_sim::GroundTruth;
use crate::view_graph::ViewId;

/// Random Fourier features per channel of the correlated point-noise field.
const FIELD_FEATURES: usize = 64;
/// Floor of every emitted confidence.
const CONF_FLOOR: f64 = 1e-6;

/// Noise model of the oracle. All magnitudes refer to the reference view's
/// normalized camera frame, so they are scale-free.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleNoiseConfig {
    /// Per-axis std of the rotation vector of the per-prediction rigid error (rad).
    pub sigma_rot: f64,
    /// Per-axis std of the translation error.
    pub sigma_trans: f64,
    /// Std of the log-scale error.
    pub sigma_scale: f64,
    /// Per-point, per-axis std of the point-noise field.
    pub sigma_point: f64,
    /// Correlation length of the point-noise field as a fraction of the image
    /// width; 0 gives independent per-pixel noise.
    pub point_corr: f64,
    pub conf_decay_eta: f64,
    pub seed: u64,
}

impl Default for OracleNoiseConfig {
    fn default() -> Self {
        Self {
            sigma_rot: 0.0,
            sigma_trans: 0.0,
            sigma_scale: 0.0,
            sigma_point: 0.0,
            point_corr: 0.5,
            conf_decay_eta: 0.0,
            seed: 0,
        }
    }
}

impl OracleNoiseConfig {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        let all = [self.sigma_rot, self.sigma_trans, self.sigma_scale, self.sigma_point, self.point_corr, self.conf_decay_eta];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(PredictorError::InvalidRequest("oracle noise parameters must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Deterministic per-prediction noise magnitude driving confidence decay.
    pub fn noise_magnitude(&self) -> f64 {
        self.sigma_rot + self.sigma_trans + self.sigma_scale + self.sigma_point
    }
}

/// Similarity taking `ref_gt_world` onto `ref_supplied`, fitted on pixels
/// valid in both.
pub fn oracle_frame_recovery(
    ref_supplied: &Pointmap<f64>,
    ref_gt_world: &Pointmap<f64>,
) -> Result<Sim3Transform<f64>, GeometryError> {
    if !ref_supplied.same_shape(ref_gt_world) {
        return Err(GeometryError::ShapeMismatch("supplied reference does not match ground truth".into()));
    }
    let (mut src, mut dst) = (Vec::new(), Vec::new());
    for i in 0..ref_supplied.len() {
        if let (Some(s), Some(g)) = (ref_supplied.point(i), ref_gt_world.point(i)) {
            src.push(*g);
            dst.push(*s);
        }
    }
    umeyama_sim3(&src, &dst, &vec![1.0; src.len()])
}

/// `max((mean(squashed)/0.5)·exp(−η·m), 1e−6)`, uniform over the image.
pub fn oracle_confidence(
    conf_in_squashed: &[f64],
    noise_magnitude: f64,
    cfg: &OracleNoiseConfig,
    width: usize,
    height: usize,
) -> ConfidenceMap<f64> {
    let mean = if conf_in_squashed.is_empty() {
        0.5
    } else {
        conf_in_squashed.iter().sum::<f64>() / conf_in_squashed.len() as f64
    };
    let c = (mean / 0.5 * (-cfg.conf_decay_eta * noise_magnitude).exp()).max(CONF_FLOOR);
    ConfidenceMap::uniform(width, height, c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stream {
    Target = 1,
    PairReference = 2,
}

struct OracleView {
    world: Pointmap<f64>,
    /// World → reference camera → normalized by the camera-frame statistics.
    canonical_from_world: Sim3Transform<f64>,
    camera_from_canonical: Sim3Transform<f64>,
}

/// Ground-truth-backed predictor with a configurable error model.
pub struct OraclePredictor {
    views: Vec<OracleView>,
    cfg: OracleNoiseConfig,
}

impl OraclePredictor {
    pub fn new(truth: &GroundTruth, cfg: OracleNoiseConfig) -> Result<Self, PredictorError> {
        cfg.validate()?;
        let views = truth
            .views
            .iter()
            .map(|v| {
                let norm = normalization_params(&v.render.camera)?;
                Ok(OracleView {
                    world: v.render.world.clone(),
                    canonical_from_world: norm.as_sim3().compose(&v.pose.world_to_camera_sim3()),
                    camera_from_canonical: norm.as_sim3().inverse(),
                })
            })
            .collect::<Result<_, GeometryError>>()?;
        Ok(Self { views, cfg })
    }

    pub fn config(&self) -> &OracleNoiseConfig {
        &self.cfg
    }

    fn view(&self, id: ViewId) -> Result<&OracleView, PredictorError> {
        self.views.get(id).ok_or(PredictorError::UnknownView(id))
    }

    fn rng(&self, reference: ViewId, target: ViewId, stream: Stream) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        for (k, v) in [self.cfg.seed, reference as u64, target as u64, stream as u64].into_iter().enumerate() {
            key[8 * k..8 * k + 8].copy_from_slice(&v.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }

    /// Target pointmap in the reference's canonical frame with the rigid error
    /// and point noise applied.
    fn noisy_canonical(&self, reference: &OracleView, points: &Pointmap<f64>, rng: &mut ChaCha8Rng, rigid: bool) -> Pointmap<f64> {
        let c = &self.cfg;
        let normal3 = |rng: &mut ChaCha8Rng| {
            Vector3::new(rng.sample::<f64, _>(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
        };
        let omega = normal3(rng) * c.sigma_rot;
        let tau = normal3(rng) * c.sigma_trans;
        let log_s: f64 = rng.sample::<f64, _>(StandardNormal) * c.sigma_scale;
        let perturb = if rigid {
            Sim3Transform { scale: log_s.exp(), rotation: Rotation::exp(&omega), translation: tau }
        } else {
            Sim3Transform::identity()
        };
        let field = NoiseField::draw(rng, points.width(), points.height(), c.point_corr);
        let canonical = reference.canonical_from_world.apply_pointmap(points);
        let (w, h, mut xyz, valid) = canonical.into_parts();
        for (idx, p) in xyz.iter_mut().enumerate() {
            if valid[idx] {
                *p = perturb.apply(p) + field.at(idx) * c.sigma_point;
            }
        }
        Pointmap::new(w, h, xyz, valid).expect("finite perturbation of finite points")
    }
}

/// Zero-mean, unit-variance vector field over pixels.
enum NoiseField {
    Independent(Vec<Vector3<f64>>),
    Smooth { width: usize, length: f64, features: Vec<[(f64, f64, f64, f64); FIELD_FEATURES]> },
}

impl NoiseField {
    fn draw(rng: &mut ChaCha8Rng, width: usize, height: usize, corr: f64) -> Self {
        if corr <= 0.0 {
            let v = (0..width * height)
                .map(|_| Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            return NoiseField::Independent(v);
        }
        let features = (0..3)
            .map(|_| {
                std::array::from_fn(|_| {
                    let a: f64 = rng.sample(StandardNormal);
                    let wx: f64 = rng.sample(StandardNormal);
                    let wy: f64 = rng.sample(StandardNormal);
                    (a, wx, wy, rng.random_range(0.0..TAU))
                })
            })
            .collect();
        NoiseField::Smooth { width, length: corr * width as f64, features }
    }

    fn at(&self, idx: usize) -> Vector3<f64> {
        match self {
            NoiseField::Independent(v) => v[idx],
            NoiseField::Smooth { width, length, features } => {
                let u = ((idx % width) as f64 + 0.5) / length;
                let v = ((idx / width) as f64 + 0.5) / length;
                let norm = (2.0 / FIELD_FEATURES as f64).sqrt();
                Vector3::from_fn(|k, _| {
                    features[k].iter().map(|(a, wx, wy, phi)| a * (wx * u + wy * v + phi).cos()).sum::<f64>() * norm
                })
            }
        }
    }
}

impl StereoPredictor for OraclePredictor {
    fn init_pair(&self, a: ViewInput<'_>, b: ViewInput<'_>) -> Result<PairPrediction, PredictorError> {
        let va = self.view(a.id)?;
        let vb = self.view(b.id)?;
        let camera_from_canonical = va.camera_from_canonical;
        let a_canonical = self.noisy_canonical(va, &va.world, &mut self.rng(a.id, b.id, Stream::PairReference), false);
        let b_canonical = self.noisy_canonical(va, &vb.world, &mut self.rng(a.id, b.id, Stream::Target), true);
        let (w, h) = (va.world.width(), va.world.height());
        let fresh = vec![0.5; w * h];
        Ok(PairPrediction {
            a_pointmap: camera_from_canonical.apply_pointmap(&a_canonical),
            a_conf: oracle_confidence(&fresh, 0.0, &self.cfg, w, h),
            b_pointmap: camera_from_canonical.apply_pointmap(&b_canonical),
            b_conf: oracle_confidence(&fresh, self.cfg.noise_magnitude(), &self.cfg, w, h),
        })
    }

    fn predict(&self, req: &PredictorRequest<'_>) -> Result<PredictorResponse, PredictorError> {
        let vr = self.view(req.ref_view_id)?;
        let vt = self.view(req.tgt_view_id)?;
        req.validate()?;
        if !req.ref_pointmap.same_shape(&vr.world) {
            return Err(PredictorError::InvalidRequest("reference pointmap size differs from the scene".into()));
        }
        let caller_from_world = oracle_frame_recovery(req.ref_pointmap, &vr.world)?;
        let caller_from_canonical = caller_from_world.compose(&vr.canonical_from_world.inverse());
        let noisy = self.noisy_canonical(vr, &vt.world, &mut self.rng(req.ref_view_id, req.tgt_view_id, Stream::Target), true);
        let (w, h) = (vt.world.width(), vt.world.height());
        Ok(PredictorResponse {
            tgt_pointmap: caller_from_canonical.apply_pointmap(&noisy),
            tgt_conf: oracle_confidence(req.ref_conf_squashed, self.cfg.noise_magnitude(), &self.cfg, w, h),
        })
    }
}
