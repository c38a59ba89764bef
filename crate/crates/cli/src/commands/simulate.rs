use std::path::{Path, PathBuf};

use increg_core::io::{write_scene, RunManifest};
use increg_core::scene_sim::{make_scene_with, ScenePreset, SceneOptions};
use serde::{Deserialize, Serialize};

use super::{create_out, finish_manifest};
use crate::settings::{require, resolve, usage, CliError};
use crate::SimulateFlags;

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    scene: ScenePreset,
    views: usize,
    seed: u64,
    width: usize,
    height: usize,
    focal: Option<f64>,
    out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Self { scene: ScenePreset::Orbit, views: 8, seed: 0, width: 32, height: 32, focal: None, out: None }
    }
}

pub fn run(config: Option<&Path>, flags: &SimulateFlags) -> Result<(), CliError> {
    let s: Settings = resolve(config, "simulate", flags)?;
    let out = require(&s.out, "out")?;
    if s.views < 2 {
        return usage(format!("--views must be at least 2, got {}", s.views));
    }
    if s.width == 0 || s.height == 0 {
        return usage("image size must be positive");
    }
    let focal = s.focal.unwrap_or(s.width as f64);
    if !(focal.is_finite() && focal > 0.0) {
        return usage(format!("--focal must be positive, got {focal}"));
    }
    let opts = SceneOptions { width: s.width, height: s.height, focal };
    let bundle = make_scene_with(s.scene, s.views, s.seed, &opts)?;
    create_out(&out)?;
    let written = write_scene(&out, &bundle.truth)?;
    // the output directory stays out of the snapshot so reruns elsewhere are byte-identical
    let mut config = serde_json::to_value(&s)?;
    config.as_object_mut().expect("settings object").remove("out");
    let mut manifest = RunManifest::new("simulate", config, s.seed);
    manifest.extra.insert("trajectory".into(), serde_json::to_value(bundle.trajectory.kind)?);
    finish_manifest(&out, manifest, &written)?;
    println!("simulated {} views of the {:?} scene into {}", s.views, s.scene, out.display());
    Ok(())
}
