use nalgebra::Vector3;

use super::SyntheticScene;
use crate::geometry::{Intrinsics, Pointmap, Se3Pose};
use crate::image::RgbImage;

const BACKGROUND: [u8; 3] = [24, 24, 32];

/// One rendered camera: world- and camera-frame pointmaps, z-depth (NaN where
/// no surface is hit) and a procedural colour image.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderedView {
    pub world: Pointmap<f64>,
    pub camera: Pointmap<f64>,
    pub depth: Vec<f64>,
    pub image: RgbImage,
}

/// Casts one ray per pixel center and keeps the closest hit.
pub fn render_view(
    scene: &SyntheticScene,
    pose: &Se3Pose<f64>,
    k: &Intrinsics<f64>,
    width: usize,
    height: usize,
) -> RenderedView {
    let mut camera = Vec::with_capacity(width * height);
    let mut image = RgbImage::filled(width, height, BACKGROUND);
    for row in 0..height {
        for col in 0..width {
            // z-component 1, so the ray parameter is the depth
            let ray_c = k.ray(col as f64 + 0.5, row as f64 + 0.5);
            let dir = pose.rotation.apply(&ray_c);
            let hit = scene
                .primitives
                .iter()
                .filter_map(|p| p.surface.intersect(&pose.center, &dir).map(|t| (t, p)))
                .min_by(|a, b| a.0.total_cmp(&b.0));
            match hit {
                Some((t, prim)) => {
                    let pc = ray_c * t;
                    image.set_pixel(col, row, shade(prim.color, &pose.camera_to_world(&pc)));
                    camera.push(Some(pc));
                }
                None => camera.push(None),
            }
        }
    }
    let mut it = camera.into_iter();
    let camera = Pointmap::from_fn(width, height, |_, _| it.next().expect("one entry per pixel"));
    let world = camera.map_valid(|p| pose.camera_to_world(p));
    let depth = (0..camera.len()).map(|i| camera.point(i).map_or(f64::NAN, |p| p.z)).collect();
    RenderedView { world, camera, depth, image }
}

fn shade(color: [u8; 3], p: &Vector3<f64>) -> [u8; 3] {
    let cell = (4.0 * p.x + 0.5).floor() + (4.0 * p.y + 0.5).floor() + (4.0 * p.z + 0.5).floor();
    let factor = if (cell as i64).rem_euclid(2) == 0 { 1.0 } else { 0.62 };
    color.map(|c| (f64::from(c) * factor).round() as u8)
}
