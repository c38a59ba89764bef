use std::time::Instant;

use rayon::prelude::*;

use super::incremental::{bootstrap_pairs, check_images, entry, failure, intrinsics_from_root};
use super::{
    finish, is_local_failure, poses_from_pointmaps, FrameLedgerEntry, ReconstructionResult, RegistrationError,
    RegistrationOptions, RegistrationPlan, StageTimings, SubtreeFailure,
};
use crate::geometry::{umeyama_sim3, GeometryError, Sim3Transform};
use crate::image::RgbImage;
use crate::predictor::{PairPrediction, StereoPredictor, ViewInput};
use crate::view_graph::ViewId;

/// Similarity taking the pair's copy of the parent onto the parent's global
/// pointmap, weighted by the pair confidence on pixels valid in both.
fn align_to_parent(pair: &PairPrediction, parent: &FrameLedgerEntry) -> Result<Sim3Transform<f64>, GeometryError> {
    let (mut src, mut dst, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..pair.a_pointmap.len() {
        if let (Some(a), Some(g)) = (pair.a_pointmap.point(i), parent.global_pointmap.point(i)) {
            src.push(*a);
            dst.push(*g);
            w.push(pair.a_conf.values()[i]);
        }
    }
    umeyama_sim3(&src, &dst, &w)
}

enum Step {
    Done(FrameLedgerEntry),
    Failed(SubtreeFailure),
    Blocked,
}

fn register_edge<P: StereoPredictor + ?Sized>(
    plan: &RegistrationPlan,
    predictor: &P,
    images: &[RgbImage],
    ledger: &[Option<FrameLedgerEntry>],
    v: ViewId,
) -> Result<Step, RegistrationError> {
    let p = plan.forest().parent(v).expect("non-root view");
    let Some(parent) = ledger[p].as_ref() else { return Ok(Step::Blocked) };
    if parent.norm.is_none() {
        return Ok(Step::Blocked);
    }
    let result = predictor
        .init_pair(ViewInput { id: p, image: &images[p] }, ViewInput { id: v, image: &images[v] })
        .and_then(|pair| {
            let s = align_to_parent(&pair, parent)?;
            Ok(entry(v, Some(p), plan.forest().depth(v), s.apply_pointmap(&pair.b_pointmap), pair.b_conf))
        });
    match result {
        Ok(e) => Ok(Step::Done(e)),
        Err(e) if is_local_failure(&e) => Ok(Step::Failed(failure(v, e))),
        Err(source) => Err(RegistrationError::Predictor { view: v, source }),
    }
}

/// Baseline that predicts every tree edge as an independent pair in the
/// parent's camera frame, then chains similarity alignments on the shared
/// parent view. The first tree's bootstrap pair doubles as its first edge.
pub fn reconstruct_infer_then_align<P: StereoPredictor + ?Sized>(
    plan: &RegistrationPlan,
    predictor: &P,
    images: &[RgbImage],
    opts: &RegistrationOptions,
) -> Result<ReconstructionResult, RegistrationError> {
    check_images(plan, images)?;
    let forest = plan.forest();
    let t0 = Instant::now();
    let pairs = bootstrap_pairs(plan, predictor, images)?;
    let mut ledger: Vec<Option<FrameLedgerEntry>> = vec![None; plan.n()];
    let (root0, partner) = plan.bootstrap()[0];
    let first = &pairs[&(root0, partner)];
    ledger[root0] = Some(entry(root0, None, 0, first.a_pointmap.clone(), first.a_conf.clone()));
    let mut placed = vec![false; plan.n()];
    placed[root0] = true;
    for &(a, b) in plan.bootstrap() {
        if !placed[b] {
            let pair = &pairs[&(a, b)];
            ledger[b] = Some(entry(b, forest.parent(b), forest.depth(b), pair.b_pointmap.clone(), pair.b_conf.clone()));
            placed[b] = true;
        }
    }
    let intrinsics = intrinsics_from_root(&first.a_pointmap, opts)?;
    let bootstrap_time = t0.elapsed();

    let t1 = Instant::now();
    let mut failures = Vec::new();
    let mut init_pair_calls = pairs.len();
    for layer in forest.layers().iter().skip(1) {
        let steps: Vec<(ViewId, Result<Step, RegistrationError>)> = layer
            .par_iter()
            .filter(|v| !placed[**v])
            .map(|&v| (v, register_edge(plan, predictor, images, &ledger, v)))
            .collect();
        for (v, step) in steps {
            match step? {
                Step::Done(e) => {
                    init_pair_calls += 1;
                    ledger[v] = Some(e);
                }
                Step::Failed(f) => {
                    init_pair_calls += 1;
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
        predict_calls: 0,
        init_pair_calls,
        timings: StageTimings { bootstrap: bootstrap_time, inference: inference_time, poses: t2.elapsed() },
    })
}
