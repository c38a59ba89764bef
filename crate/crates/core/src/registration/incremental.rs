use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::{
    finish, is_local_failure, poses_from_pointmaps, FrameLedgerEntry, ReconstructionResult, RegistrationError,
    RegistrationOptions, RegistrationPlan, StageTimings, SubtreeFailure,
};
use crate::geometry::{
    apply_denormalization, apply_normalization, estimate_focal, normalization_params, ConfidenceMap, Intrinsics,
    Pointmap,
};
use crate::image::RgbImage;
use crate::predictor::{PairPrediction, PredictorError, PredictorRequest, StereoPredictor, ViewInput};
use crate::stereo_model::squash_confidence;
use crate::view_graph::ViewId;

/// Squashed confidences are kept strictly inside `(0, 1)`.
const SQUASH_MARGIN: f64 = 1e-12;

pub(super) fn entry(
    view: ViewId,
    parent: Option<ViewId>,
    depth: usize,
    global_pointmap: Pointmap<f64>,
    raw_conf: ConfidenceMap<f64>,
) -> FrameLedgerEntry {
    let norm = normalization_params(&global_pointmap).ok();
    FrameLedgerEntry { view, parent, depth, global_pointmap, raw_conf, norm }
}

pub(super) fn check_images(plan: &RegistrationPlan, images: &[RgbImage]) -> Result<(), RegistrationError> {
    if images.len() != plan.n() {
        return Err(RegistrationError::ImageCount { plan: plan.n(), images: images.len() });
    }
    Ok(())
}

/// Runs every distinct bootstrap pair once.
pub(super) fn bootstrap_pairs<P: StereoPredictor + ?Sized>(
    plan: &RegistrationPlan,
    predictor: &P,
    images: &[RgbImage],
) -> Result<BTreeMap<(ViewId, ViewId), PairPrediction>, RegistrationError> {
    let mut pairs = BTreeMap::new();
    for &(a, b) in plan.bootstrap() {
        if pairs.contains_key(&(a, b)) {
            continue;
        }
        let p = predictor
            .init_pair(ViewInput { id: a, image: &images[a] }, ViewInput { id: b, image: &images[b] })
            .map_err(|source| RegistrationError::Predictor { view: b, source })?;
        pairs.insert((a, b), p);
    }
    Ok(pairs)
}

pub(super) fn intrinsics_from_root(
    root: &Pointmap<f64>,
    opts: &RegistrationOptions,
) -> Result<Intrinsics<f64>, RegistrationError> {
    let (cx, cy) = (root.width() as f64 / 2.0, root.height() as f64 / 2.0);
    match opts.focal {
        Some(f) => Ok(Intrinsics { focal: f, cx, cy }),
        None => estimate_focal(root, cx, cy).map_err(RegistrationError::Bootstrap),
    }
}

fn squashed(conf: &ConfidenceMap<f64>) -> Vec<f64> {
    squash_confidence(conf).into_iter().map(|s| s.clamp(SQUASH_MARGIN, 1.0 - SQUASH_MARGIN)).collect()
}

enum Step {
    Done(FrameLedgerEntry),
    Failed(SubtreeFailure),
    Blocked,
}

fn register_view<P: StereoPredictor + ?Sized>(
    plan: &RegistrationPlan,
    predictor: &P,
    images: &[RgbImage],
    ledger: &[Option<FrameLedgerEntry>],
    v: ViewId,
) -> Result<Step, RegistrationError> {
    let p = plan.forest().parent(v).expect("non-root view");
    let Some(parent) = ledger[p].as_ref() else { return Ok(Step::Blocked) };
    let Some(norm) = parent.norm else { return Ok(Step::Blocked) };
    let reference = apply_normalization(&parent.global_pointmap, &norm);
    let conf = squashed(&parent.raw_conf);
    let req = PredictorRequest {
        ref_view_id: p,
        tgt_view_id: v,
        ref_image: &images[p],
        ref_pointmap: &reference,
        ref_conf_squashed: &conf,
        tgt_image: &images[v],
    };
    match predictor.predict(&req) {
        Ok(resp) => {
            let global = apply_denormalization(&resp.tgt_pointmap, &norm);
            Ok(Step::Done(entry(v, Some(p), plan.forest().depth(v), global, resp.tgt_conf)))
        }
        Err(e) if is_local_failure(&e) => Ok(Step::Failed(failure(v, e))),
        Err(source) => Err(RegistrationError::Predictor { view: v, source }),
    }
}

pub(super) fn failure(view: ViewId, e: PredictorError) -> SubtreeFailure {
    SubtreeFailure { view, reason: e.to_string(), skipped: Vec::new() }
}

/// Registers every view of `plan` with one prediction per tree edge, each
/// conditioned on the parent's global pointmap.
pub fn reconstruct<P: StereoPredictor + ?Sized>(
    plan: &RegistrationPlan,
    predictor: &P,
    images: &[RgbImage],
    opts: &RegistrationOptions,
) -> Result<ReconstructionResult, RegistrationError> {
    check_images(plan, images)?;
    let n = plan.n();
    let forest = plan.forest();
    let t0 = Instant::now();
    let pairs = bootstrap_pairs(plan, predictor, images)?;
    let mut ledger: Vec<Option<FrameLedgerEntry>> = vec![None; n];
    let (root0, partner) = plan.bootstrap()[0];
    let first = &pairs[&(root0, partner)];
    ledger[root0] = Some(entry(root0, None, 0, first.a_pointmap.clone(), first.a_conf.clone()));
    for &(a, r) in &plan.bootstrap()[1..] {
        let pair = &pairs[&(a, r)];
        ledger[r] = Some(entry(r, None, 0, pair.b_pointmap.clone(), pair.b_conf.clone()));
    }
    let intrinsics = intrinsics_from_root(&first.a_pointmap, opts)?;
    let bootstrap_time = t0.elapsed();

    let t1 = Instant::now();
    let mut failures = Vec::new();
    let mut predict_calls = 0;
    for layer in forest.layers().iter().skip(1) {
        let steps: Vec<(ViewId, Result<Step, RegistrationError>)> = layer
            .par_iter()
            .map(|&v| (v, register_view(plan, predictor, images, &ledger, v)))
            .collect();
        for (v, step) in steps {
            match step? {
                Step::Done(e) => {
                    predict_calls += 1;
                    ledger[v] = Some(e);
                }
                Step::Failed(f) => {
                    predict_calls += 1;
                    failures.push(f);
                }
                Step::Blocked => {}
            }
        }
    }
    let inference_time = t1.elapsed();

    let (ledger, failures) = finish(plan, ledger, failures);
    let t2 = Instant::now();
    let pnp = poses_from_pointmaps(&ledger, &intrinsics, root0, opts);
    let poses = pnp.iter().map(|r| r.as_ref().ok().map(|s| s.pose)).collect();
    Ok(ReconstructionResult {
        ledger,
        poses,
        pnp,
        intrinsics,
        bootstrap: plan.bootstrap().to_vec(),
        failures,
        predict_calls,
        init_pair_calls: pairs.len(),
        timings: StageTimings { bootstrap: bootstrap_time, inference: inference_time, poses: t2.elapsed() },
    })
}
