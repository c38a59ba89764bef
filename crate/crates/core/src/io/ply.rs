use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::IoError;
use crate::image::RgbImage;
use crate::registration::ReconstructionResult;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudPoint {
    pub position: [f32; 3],
    pub color: [u8; 3],
    pub confidence: f32,
}

/// Binary little-endian PLY with `x y z red green blue confidence` vertices.
pub fn write_ply_to<W: Write>(w: &mut W, points: &[CloudPoint]) -> Result<(), IoError> {
    if points.is_empty() {
        return Err(IoError::Format("cannot write an empty point cloud".into()));
    }
    write!(
        w,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         property float confidence\nend_header\n",
        points.len()
    )?;
    let mut buf = Vec::with_capacity(points.len() * 19);
    for p in points {
        p.position.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
        buf.extend_from_slice(&p.color);
        buf.extend_from_slice(&p.confidence.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_ply(path: &Path, points: &[CloudPoint]) -> Result<(), IoError> {
    if points.is_empty() {
        return Err(IoError::Format("cannot write an empty point cloud".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_ply_to(&mut w, points)?;
    w.flush()?;
    Ok(())
}

/// Merged cloud of every registered view's global pointmap, keeping pixels
/// whose raw confidence exceeds `min_conf`.
pub fn cloud_from_result(result: &ReconstructionResult, images: &[RgbImage], min_conf: f64) -> Vec<CloudPoint> {
    let mut out = Vec::new();
    for entry in result.ledger.iter().flatten() {
        let image = images.get(entry.view);
        for (i, p) in entry.global_pointmap.iter_valid() {
            let c = entry.raw_conf.values()[i];
            if c <= min_conf {
                continue;
            }
            let color = image.map_or([255; 3], |im| im.pixel(i % im.width(), i / im.width()));
            out.push(CloudPoint { position: [p.x as f32, p.y as f32, p.z as f32], color, confidence: c as f32 });
        }
    }
    out
}
