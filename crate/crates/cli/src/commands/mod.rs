pub mod ensemble;
pub mod evaluate;
pub mod reconstruct;
pub mod serve;
pub mod simulate;
pub mod tree;

use std::path::{Path, PathBuf};

use anyhow::Context;
use increg_core::io::{load_poses, PoseFile, RunManifest, POSES_FILE};
use increg_core::predictor::OracleNoiseConfig;
use increg_core::view_graph::GraphError;
use serde::{Deserialize, Serialize};

use crate::settings::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Oracle noise settings shared by `reconstruct` and `serve`.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSettings {
    pub sigma_rot: f64,
    pub sigma_trans: f64,
    pub sigma_scale: f64,
    pub sigma_point: f64,
    pub point_corr: Option<f64>,
    pub conf_eta: f64,
}

impl NoiseSettings {
    pub fn oracle(&self, seed: u64) -> OracleNoiseConfig {
        OracleNoiseConfig {
            sigma_rot: self.sigma_rot,
            sigma_trans: self.sigma_trans,
            sigma_scale: self.sigma_scale,
            sigma_point: self.sigma_point,
            point_corr: self.point_corr.unwrap_or(OracleNoiseConfig::default().point_corr),
            conf_decay_eta: self.conf_eta,
            seed,
        }
    }
}

/// Root/cluster problems are caller mistakes; everything else is a failure.
pub fn graph_error(e: GraphError) -> CliError {
    match e {
        GraphError::InvalidRoots(_) | GraphError::InvalidClusterCount { .. } => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.into()),
    }
}

pub fn create_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(())
}

/// `poses.json` given directly or inside a directory.
pub fn poses_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(POSES_FILE)
    } else if p.file_name().is_some_and(|n| n == MANIFEST_FILE) {
        p.with_file_name(POSES_FILE)
    } else {
        p.to_path_buf()
    }
}

pub fn read_poses(p: &Path) -> Result<PoseFile, CliError> {
    let path = poses_path(p);
    Ok(load_poses(&path).with_context(|| format!("reading {}", path.display()))?)
}

/// Writes the manifest with outputs listed relative to `out`, sorted.
pub fn finish_manifest(out: &Path, mut manifest: RunManifest, written: &[PathBuf]) -> Result<(), CliError> {
    let mut names: Vec<String> = written
        .iter()
        .map(|p| p.strip_prefix(out).unwrap_or(p).to_string_lossy().into_owned())
        .collect();
    names.push(MANIFEST_FILE.to_string());
    names.sort();
    manifest.outputs = names;
    manifest.save(&out.join(MANIFEST_FILE))?;
    Ok(())
}
