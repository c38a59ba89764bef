use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use increg_core::image::RgbImage;
use increg_core::io::{
    cloud_from_result, read_scene, read_similarity, save_pointmap, save_poses, write_ply, IntrinsicsRecord, PoseFile,
    RunManifest, POSES_FILE,
};
use increg_core::predictor::{ExternalPredictor, OraclePredictor, StereoPredictor, ToyNetPredictor};
use increg_core::registration::{
    reconstruct, reconstruct_infer_then_align, ReconstructionResult, RegistrationOptions, RegistrationPlan,
};
use increg_core::stereo_model::ToyNetConfig;
use increg_core::view_graph::{spanning_forest, TreeKind};
use serde::{Deserialize, Serialize};

use super::{create_out, finish_manifest, graph_error, NoiseSettings};
use crate::settings::{require, resolve, usage, CliError};
use crate::ReconstructFlags;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PredictorKind {
    #[default]
    Oracle,
    Toynet,
    External,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    #[default]
    Direct,
    Align,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    scene: Option<PathBuf>,
    sim: Option<PathBuf>,
    predictor: PredictorKind,
    predictor_cmd: Option<String>,
    predictor_args: Vec<String>,
    tree: TreeKind,
    root: Option<usize>,
    roots: Option<usize>,
    compress: usize,
    mode: Mode,
    conf_threshold: f64,
    focal: Option<f64>,
    seed: u64,
    #[serde(flatten)]
    noise: NoiseSettings,
    out: Option<PathBuf>,
}

fn make_predictor(s: &Settings, truth: &increg_core::scene_sim::GroundTruth) -> Result<Box<dyn StereoPredictor>, CliError> {
    Ok(match s.predictor {
        PredictorKind::Oracle => Box::new(OraclePredictor::new(truth, s.noise.oracle(s.seed)).map_err(|e| CliError::Usage(e.to_string()))?),
        PredictorKind::Toynet => {
            let cfg = ToyNetConfig::default();
            let (w, h) = truth.views.first().map(|v| (v.render.image.width(), v.render.image.height())).unwrap_or((0, 0));
            cfg.validate(w, h).map_err(|e| CliError::Usage(format!("toy network cannot take {w}x{h} images: {e}")))?;
            Box::new(ToyNetPredictor::new(cfg, s.seed))
        }
        PredictorKind::External => {
            let Some(cmd) = &s.predictor_cmd else {
                return usage("--predictor external needs --predictor-cmd");
            };
            Box::new(ExternalPredictor::spawn(cmd, &s.predictor_args)?)
        }
    })
}

fn write_outputs(out: &Path, result: &ReconstructionResult, images: &[RgbImage], s: &Settings) -> Result<Vec<PathBuf>, CliError> {
    let (w, h) = (images[0].width(), images[0].height());
    let depths: Vec<_> = result.ledger.iter().map(|e| e.as_ref().map(|e| e.depth)).collect();
    let poses = PoseFile::from_poses(&result.poses, Some(&depths)).with_intrinsics(&result.intrinsics, w, h);
    let mut written = vec![out.join(POSES_FILE), out.join("intrinsics.json")];
    save_poses(&written[0], &poses)?;
    let k = IntrinsicsRecord { focal: result.intrinsics.focal, cx: result.intrinsics.cx, cy: result.intrinsics.cy, width: w, height: h };
    std::fs::write(&written[1], serde_json::to_string_pretty(&k)? + "\n")?;
    for entry in result.ledger.iter().flatten() {
        let path = out.join(format!("view_{:03}.pmap", entry.view));
        save_pointmap(&path, &entry.global_pointmap.cast::<f32>(), Some(&entry.raw_conf.cast::<f32>()))?;
        written.push(path);
    }
    let cloud = cloud_from_result(result, images, s.conf_threshold);
    if cloud.is_empty() {
        log::warn!("no points pass the confidence threshold; skipping cloud.ply");
    } else {
        let path = out.join("cloud.ply");
        write_ply(&path, &cloud)?;
        written.push(path);
    }
    Ok(written)
}

pub fn run(config: Option<&Path>, flags: &ReconstructFlags) -> Result<(), CliError> {
    let s: Settings = resolve(config, "reconstruct", flags)?;
    let out = require(&s.out, "out")?;
    let scene = require(&s.scene, "scene")?;
    if !(s.conf_threshold.is_finite() && s.conf_threshold >= 0.0) {
        return usage("--conf-threshold must be a non-negative number");
    }
    let t_load = Instant::now();
    let truth = read_scene(&scene).with_context(|| format!("reading scene {}", scene.display()))?;
    let sim = match &s.sim {
        Some(p) => read_similarity(p).with_context(|| format!("reading {}", p.display()))?,
        None => truth.overlap.clone(),
    };
    if sim.n() != truth.len() {
        return usage(format!("similarity matrix covers {} views, scene has {}", sim.n(), truth.len()));
    }
    let images: Vec<RgbImage> = truth.views.iter().map(|v| v.render.image.clone()).collect();
    let forest = spanning_forest(&sim, s.tree, s.root, s.roots.unwrap_or(1), s.seed).map_err(graph_error)?;
    let plan = RegistrationPlan::new(&forest, s.compress, Some(&sim))?;
    let predictor = make_predictor(&s, &truth)?;
    let load = t_load.elapsed();

    let opts = RegistrationOptions { conf_threshold: s.conf_threshold, focal: s.focal, ..Default::default() };
    let result = match s.mode {
        Mode::Direct => reconstruct(&plan, predictor.as_ref(), &images, &opts)?,
        Mode::Align => reconstruct_infer_then_align(&plan, predictor.as_ref(), &images, &opts)?,
    };
    drop(predictor);

    create_out(&out)?;
    let t_write = Instant::now();
    let written = write_outputs(&out, &result, &images, &s)?;
    let mut manifest = RunManifest::new("reconstruct", serde_json::to_value(&s)?, s.seed);
    manifest.tree = Some(plan.forest().summary());
    manifest.bootstrap = plan.bootstrap().to_vec();
    manifest.predict_calls = result.predict_calls;
    manifest.init_pair_calls = result.init_pair_calls;
    let t = &result.timings;
    for (name, d) in [("load", load), ("bootstrap", t.bootstrap), ("inference", t.inference), ("poses", t.poses), ("write", t_write.elapsed())] {
        manifest.timings_s.insert(name.into(), d.as_secs_f64());
    }
    if !result.failures.is_empty() {
        manifest.extra.insert("failures".into(), serde_json::to_value(&result.failures)?);
    }
    finish_manifest(&out, manifest, &written)?;
    let posed = result.poses.iter().filter(|p| p.is_some()).count();
    println!(
        "registered {posed}/{} views  max depth {}  predict calls {}  init_pair calls {}",
        result.len(),
        plan.forest().max_depth(),
        result.predict_calls,
        result.init_pair_calls
    );
    Ok(())
}
