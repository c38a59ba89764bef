//! On-disk formats: pointmaps, poses, similarity matrices, point clouds,
//! images, scene bundles and run manifests. Everything is little-endian.

mod manifest;
mod pmap;
mod ply;
mod poses;
mod ppm;
mod scene;
mod similarity;

pub use manifest::{RunManifest, TreeSummary};
pub use pmap::{
    load_pointmap, pmap_to_pointmap, pointmap_to_pmap, read_pmap, save_pointmap, write_pmap, PmapData, PmapDtype,
};
pub use ply::{cloud_from_result, write_ply, write_ply_to, CloudPoint};
pub use poses::{load_poses, save_poses, IntrinsicsRecord, PoseFile, PoseRecord, FRAME_CONVENTION};
pub use ppm::{load_ppm, read_ppm, save_ppm, write_ppm};
pub use scene::{read_scene, write_scene, SceneFiles, POSES_FILE, SIMILARITY_FILE};
pub use similarity::{read_similarity, read_similarity_csv, save_similarity_csv, write_similarity_csv};

use std::path::Path;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::view_graph::GraphError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic number")]
    BadMagic,
    #[error("file is truncated")]
    TruncatedFile,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}
