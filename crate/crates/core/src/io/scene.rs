use std::path::{Path, PathBuf};

use super::{load_pointmap, load_poses, load_ppm, read_similarity, save_pointmap, save_poses, save_ppm, save_similarity_csv};
use super::{IoError, PoseFile};
use crate::scene_sim::{GroundTruth, RenderedView, ViewTruth};

pub const POSES_FILE: &str = "poses.json";
pub const SIMILARITY_FILE: &str = "sim.csv";

/// File names of one view inside a scene directory.
pub struct SceneFiles;

impl SceneFiles {
    pub fn world(view: usize) -> String {
        format!("view_{view:03}_world.pmap")
    }

    pub fn camera(view: usize) -> String {
        format!("view_{view:03}_camera.pmap")
    }

    pub fn image(view: usize) -> String {
        format!("view_{view:03}.ppm")
    }
}

/// Writes a ground-truth bundle and returns the written paths. Pointmaps are
/// stored in f64 so they reload bit-exactly.
pub fn write_scene(dir: &Path, truth: &GroundTruth) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let (w, h) = truth
        .views
        .first()
        .map(|v| (v.render.world.width(), v.render.world.height()))
        .ok_or_else(|| IoError::Format("scene has no views".into()))?;
    for (i, v) in truth.views.iter().enumerate() {
        let paths = [dir.join(SceneFiles::world(i)), dir.join(SceneFiles::camera(i)), dir.join(SceneFiles::image(i))];
        save_pointmap(&paths[0], &v.render.world, None)?;
        save_pointmap(&paths[1], &v.render.camera, None)?;
        save_ppm(&paths[2], &v.render.image)?;
        written.extend(paths);
    }
    let poses: Vec<_> = truth.views.iter().map(|v| Some(v.pose)).collect();
    let file = PoseFile::from_poses(&poses, None).with_intrinsics(&truth.intrinsics, w, h);
    save_poses(&dir.join(POSES_FILE), &file)?;
    save_similarity_csv(&dir.join(SIMILARITY_FILE), &truth.overlap)?;
    written.push(dir.join(POSES_FILE));
    written.push(dir.join(SIMILARITY_FILE));
    Ok(written)
}

/// Loads a bundle written by [`write_scene`]. Pointmaps, images and the
/// similarity matrix come back bit-exactly; rotations pass through the
/// stored quaternion.
pub fn read_scene(dir: &Path) -> Result<GroundTruth, IoError> {
    let file = load_poses(&dir.join(POSES_FILE))?;
    let intrinsics = file.intrinsics()?.ok_or_else(|| IoError::Format("scene poses carry no intrinsics".into()))?;
    let poses = file.poses()?;
    let overlap = read_similarity(&dir.join(SIMILARITY_FILE))?;
    if overlap.n() != poses.len() {
        return Err(IoError::Format(format!("{} poses but a {}-view similarity matrix", poses.len(), overlap.n())));
    }
    let views = poses
        .into_iter()
        .enumerate()
        .map(|(i, pose)| {
            let pose = pose.ok_or_else(|| IoError::Format(format!("ground-truth pose {i} is missing")))?;
            let (world, _) = load_pointmap::<f64>(&dir.join(SceneFiles::world(i)))?;
            let (camera, _) = load_pointmap::<f64>(&dir.join(SceneFiles::camera(i)))?;
            let image = load_ppm(&dir.join(SceneFiles::image(i)))?;
            if !world.same_shape(&camera) || image.width() != world.width() || image.height() != world.height() {
                return Err(IoError::Format(format!("view {i} files disagree in shape")));
            }
            let depth = (0..camera.len()).map(|k| camera.point(k).map_or(f64::NAN, |p| p.z)).collect();
            Ok(ViewTruth { pose, render: RenderedView { world, camera, depth, image } })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(GroundTruth { intrinsics, views, overlap })
}
