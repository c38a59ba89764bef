use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{read_json, write_json, IoError};
use crate::geometry::{Intrinsics, Rotation, Se3Pose};

pub const FRAME_CONVENTION: &str = "camera-to-world rotation, camera center in world; x right, y down, z forward";

const QUAT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub id: usize,
    pub quaternion_wxyz: [f64; 4],
    pub center: [f64; 3],
    pub valid: bool,
    #[serde(default)]
    pub depth: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicsRecord {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseFile {
    pub frame_convention: String,
    #[serde(default)]
    pub intrinsics: Option<IntrinsicsRecord>,
    pub views: Vec<PoseRecord>,
}

impl PoseFile {
    /// Missing poses are stored as identity with `valid = false`.
    pub fn from_poses(poses: &[Option<Se3Pose<f64>>], depths: Option<&[Option<usize>]>) -> Self {
        let views = poses
            .iter()
            .enumerate()
            .map(|(id, p)| {
                let depth = depths.and_then(|d| d.get(id).copied().flatten());
                match p {
                    Some(p) => PoseRecord {
                        id,
                        quaternion_wxyz: p.rotation.to_quaternion_wxyz(),
                        center: [p.center.x, p.center.y, p.center.z],
                        valid: true,
                        depth,
                    },
                    None => PoseRecord { id, quaternion_wxyz: [1.0, 0.0, 0.0, 0.0], center: [0.0; 3], valid: false, depth },
                }
            })
            .collect();
        Self { frame_convention: FRAME_CONVENTION.to_string(), intrinsics: None, views }
    }

    pub fn with_intrinsics(mut self, k: &Intrinsics<f64>, width: usize, height: usize) -> Self {
        self.intrinsics = Some(IntrinsicsRecord { focal: k.focal, cx: k.cx, cy: k.cy, width, height });
        self
    }

    /// Checks ids are `0..n` in order, quaternions are unit and values finite.
    pub fn validate(&self) -> Result<(), IoError> {
        for (i, v) in self.views.iter().enumerate() {
            if v.id != i {
                return Err(IoError::Format(format!("view record {i} has id {}", v.id)));
            }
            if !v.quaternion_wxyz.iter().chain(&v.center).all(|x| x.is_finite()) {
                return Err(IoError::Format(format!("non-finite pose for view {i}")));
            }
            let norm = v.quaternion_wxyz.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > QUAT_TOL {
                return Err(IoError::Format(format!("quaternion of view {i} has norm {norm}")));
            }
        }
        if let Some(k) = &self.intrinsics {
            Intrinsics::new(k.focal, k.cx, k.cy)?;
        }
        Ok(())
    }

    pub fn poses(&self) -> Result<Vec<Option<Se3Pose<f64>>>, IoError> {
        self.validate()?;
        self.views
            .iter()
            .map(|v| {
                v.valid
                    .then(|| {
                        let r = Rotation::from_quaternion_wxyz(v.quaternion_wxyz)?;
                        Ok(Se3Pose::new(r, Vector3::from(v.center)))
                    })
                    .transpose()
            })
            .collect()
    }

    pub fn depths(&self) -> Vec<Option<usize>> {
        self.views.iter().map(|v| v.depth).collect()
    }

    pub fn intrinsics(&self) -> Result<Option<Intrinsics<f64>>, IoError> {
        self.intrinsics.map(|k| Intrinsics::new(k.focal, k.cx, k.cy).map_err(IoError::from)).transpose()
    }
}

pub fn save_poses(path: &Path, file: &PoseFile) -> Result<(), IoError> {
    file.validate()?;
    write_json(path, file)
}

pub fn load_poses(path: &Path) -> Result<PoseFile, IoError> {
    let file: PoseFile = read_json(path)?;
    file.validate()?;
    Ok(file)
}
