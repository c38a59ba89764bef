use std::f64::consts::TAU;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    overlap_similarity, render_view, CameraTrajectory, GroundTruth, Primitive, SceneBundle, SceneError, Surface,
    SyntheticScene, TrajectoryKind, ViewTruth, MIN_COVERAGE,
};
use crate::geometry::{Intrinsics, Rotation, Se3Pose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenePreset {
    /// Ring of cameras around objects on a ground plane.
    Orbit,
    /// Downward-looking lawnmower pattern over scattered objects.
    Grid,
    /// Cameras translating sideways in front of a wall.
    Line,
}

impl FromStr for ScenePreset {
    type Err = SceneError;
    fn from_str(s: &str) -> Result<Self, SceneError> {
        match s {
            "orbit" => Ok(Self::Orbit),
            "grid" => Ok(Self::Grid),
            "line" => Ok(Self::Line),
            other => Err(SceneError::InvalidPreset(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneOptions {
    pub width: usize,
    pub height: usize,
    pub focal: f64,
}

impl SceneOptions {
    pub fn square(size: usize) -> Self {
        Self { width: size, height: size, focal: size as f64 }
    }
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self::square(32)
    }
}

/// `make_scene_with` at the default 32×32 resolution.
pub fn make_scene(preset: &str, views: usize, seed: u64) -> Result<SceneBundle, SceneError> {
    make_scene_with(preset.parse()?, views, seed, &SceneOptions::default())
}

pub fn make_scene_with(
    preset: ScenePreset,
    views: usize,
    seed: u64,
    opts: &SceneOptions,
) -> Result<SceneBundle, SceneError> {
    if views < 2 {
        return Err(SceneError::TooFewViews(views));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (primitives, poses, kind) = match preset {
        ScenePreset::Orbit => orbit(views, &mut rng),
        ScenePreset::Grid => grid(views, &mut rng),
        ScenePreset::Line => line(views, &mut rng),
    };
    let scene = SyntheticScene::new(primitives)?;
    let k = Intrinsics::new(opts.focal, opts.width as f64 / 2.0, opts.height as f64 / 2.0)
        .map_err(|e| SceneError::InvalidScene(e.to_string()))?;

    let renders: Vec<_> = poses.par_iter().map(|p| render_view(&scene, p, &k, opts.width, opts.height)).collect();
    let views_truth: Vec<ViewTruth> =
        poses.iter().zip(renders).map(|(pose, render)| ViewTruth { pose: *pose, render }).collect();
    for (i, v) in views_truth.iter().enumerate() {
        let fraction = v.render.camera.valid_count() as f64 / v.render.camera.len() as f64;
        if fraction < MIN_COVERAGE {
            return Err(SceneError::InsufficientCoverage { view: i, fraction });
        }
    }
    let overlap = overlap_similarity(&views_truth, &k);
    let trajectory = CameraTrajectory { kind, poses, intrinsics: k, width: opts.width, height: opts.height };
    Ok(SceneBundle { scene, trajectory, truth: GroundTruth { intrinsics: k, views: views_truth, overlap } })
}

/// Camera at `eye` looking at `target`, image-up roughly along `up`
/// (x right, y down, z forward).
pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>) -> Se3Pose<f64> {
    let z = (target - eye).normalize();
    let x = z.cross(&up).normalize();
    let y = z.cross(&x);
    Se3Pose::new(Rotation::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z])), eye)
}

fn palette(rng: &mut ChaCha8Rng) -> [u8; 3] {
    [rng.random_range(60..=240), rng.random_range(60..=240), rng.random_range(60..=240)]
}

fn ground(center: Vector3<f64>, half: f64, rng: &mut ChaCha8Rng) -> Primitive {
    Primitive { surface: Surface::plane(center, Vector3::x(), Vector3::y(), half, half), color: palette(rng) }
}

fn resting_box(x: f64, y: f64, size: Vector3<f64>, rng: &mut ChaCha8Rng) -> Primitive {
    let min = Vector3::new(x - size.x / 2.0, y - size.y / 2.0, 0.0);
    Primitive { surface: Surface::Cuboid { min, max: min + size }, color: palette(rng) }
}

type Layout = (Vec<Primitive>, Vec<Se3Pose<f64>>, TrajectoryKind);

fn orbit(n: usize, rng: &mut ChaCha8Rng) -> Layout {
    let mut prims = vec![ground(Vector3::zeros(), 4.0, rng)];
    let sphere_c = Vector3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 0.6);
    prims.push(Primitive { surface: Surface::Sphere { center: sphere_c, radius: 0.6 }, color: palette(rng) });
    for _ in 0..3 {
        let a = rng.random_range(0.0..TAU);
        let r = rng.random_range(0.9..1.6);
        let size = Vector3::new(rng.random_range(0.3..0.6), rng.random_range(0.3..0.6), rng.random_range(0.3..0.9));
        prims.push(resting_box(r * a.cos(), r * a.sin(), size, rng));
    }
    let step = TAU / n as f64;
    let poses = (0..n)
        .map(|i| {
            let a = i as f64 * step + rng.random_range(-0.15..0.15) * step;
            let radius = 3.2 + rng.random_range(-0.1..0.1);
            let eye = Vector3::new(radius * a.cos(), radius * a.sin(), 1.6 + rng.random_range(-0.1..0.1));
            look_at(eye, Vector3::new(0.0, 0.0, 0.4), Vector3::z())
        })
        .collect();
    (prims, poses, TrajectoryKind::Orbit)
}

fn grid(n: usize, rng: &mut ChaCha8Rng) -> Layout {
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let spacing = 1.0;
    let (span_x, span_y) = ((cols - 1) as f64 * spacing, (rows - 1) as f64 * spacing);
    let mid = Vector3::new(span_x / 2.0, span_y / 2.0, 0.0);
    let mut prims = vec![ground(mid, span_x.max(span_y) / 2.0 + 4.0, rng)];
    for k in 0..(n / 2).max(4) {
        let x = rng.random_range(-0.5..span_x + 0.5);
        let y = rng.random_range(-0.5..span_y + 0.5);
        if k % 2 == 0 {
            let size = Vector3::new(rng.random_range(0.2..0.5), rng.random_range(0.2..0.5), rng.random_range(0.2..0.8));
            prims.push(resting_box(x, y, size, rng));
        } else {
            let r = rng.random_range(0.15..0.35);
            prims.push(Primitive { surface: Surface::Sphere { center: Vector3::new(x, y, r), radius: r }, color: palette(rng) });
        }
    }
    let tilt = Vector3::new(0.15, 0.1, -1.0);
    let poses = (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let c = if r % 2 == 0 { c } else { cols - 1 - c };
            let eye = Vector3::new(
                c as f64 * spacing + rng.random_range(-0.05..0.05),
                r as f64 * spacing + rng.random_range(-0.05..0.05),
                3.0 + rng.random_range(-0.05..0.05),
            );
            look_at(eye, eye + tilt, Vector3::y())
        })
        .collect();
    (prims, poses, TrajectoryKind::Grid)
}

fn line(n: usize, rng: &mut ChaCha8Rng) -> Layout {
    let step = 0.2;
    let length = (n - 1) as f64 * step;
    let mid_x = length / 2.0;
    let half_len = length / 2.0 + 3.0;
    let wall = Primitive {
        surface: Surface::plane(Vector3::new(mid_x, 2.0, 0.45), Vector3::x(), Vector3::z(), half_len, 1.05),
        color: palette(rng),
    };
    let floor = Primitive {
        surface: Surface::plane(Vector3::new(mid_x, 1.0, -0.6), Vector3::x(), Vector3::y(), half_len, 1.0),
        color: palette(rng),
    };
    let poses = (0..n)
        .map(|i| {
            let eye = Vector3::new(i as f64 * step, 0.0, 0.0);
            look_at(eye, eye + Vector3::y(), Vector3::z())
        })
        .collect();
    (vec![wall, floor], poses, TrajectoryKind::Line)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn look_at_axes() {
        let p = look_at(Vector3::zeros(), Vector3::y(), Vector3::z());
        let m = p.rotation.matrix();
        assert!((m.column(0) - Vector3::x()).norm() < 1e-15);
        assert!((m.column(1) + Vector3::z()).norm() < 1e-15);
        assert!((m.determinant() - 1.0).abs() < 1e-12);
    }

    fn depth_bits(b: &SceneBundle) -> Vec<u64> {
        b.truth.views.iter().flat_map(|v| v.render.depth.iter().map(|d| d.to_bits())).collect()
    }

    #[test]
    fn orbit_is_deterministic() {
        let a = make_scene("orbit", 8, 1).unwrap();
        let b = make_scene("orbit", 8, 1).unwrap();
        assert_eq!(depth_bits(&a), depth_bits(&b));
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.truth.overlap, b.truth.overlap);
        for (x, y) in a.truth.views.iter().zip(&b.truth.views) {
            assert_eq!(x.render.world, y.render.world);
            assert_eq!(x.render.camera, y.render.camera);
            assert_eq!(x.render.image, y.render.image);
        }
        let c = make_scene("orbit", 8, 2).unwrap();
        assert_ne!(depth_bits(&a), depth_bits(&c));
    }

    #[test]
    fn errors() {
        assert!(matches!(make_scene("spiral", 4, 0), Err(SceneError::InvalidPreset(_))));
        assert!(matches!(make_scene("orbit", 1, 0), Err(SceneError::TooFewViews(1))));
    }

    #[test]
    fn line_overlap_decreases_with_separation() {
        let b = make_scene("line", 50, 3).unwrap();
        let s = &b.truth.overlap;
        for i in 0..50 {
            let mut reached_zero = false;
            for j in (i + 1)..50 {
                let (prev, cur) = (s.get(i, j - 1), s.get(i, j));
                if reached_zero {
                    assert_eq!(cur, 0.0);
                } else if cur == 0.0 {
                    reached_zero = true;
                } else {
                    assert!(cur < prev, "s({i},{j}) = {cur} not below {prev}");
                }
            }
            assert!(reached_zero || i >= 40);
        }
    }

    #[test]
    fn overlap_properties() {
        for preset in ["orbit", "grid", "line"] {
            let b = make_scene(preset, 9, 5).unwrap();
            let s = &b.truth.overlap;
            for i in 0..9 {
                assert_eq!(s.get(i, i), 1.0);
                for j in 0..9 {
                    assert_eq!(s.get(i, j), s.get(j, i));
                    assert!((0.0..=1.0).contains(&s.get(i, j)));
                }
            }
        }
    }

    #[test]
    fn identical_poses_fully_overlap() {
        let b = make_scene("orbit", 3, 4).unwrap();
        let v = b.truth.views[1].clone();
        let sim = overlap_similarity(&[v.clone(), v], &b.truth.intrinsics);
        assert!((sim.get(0, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn every_preset_meets_coverage_and_closure() {
        for preset in ["orbit", "grid", "line"] {
            for views in [2, 8, 30] {
                let b = make_scene(preset, views, 11).unwrap();
                let k = b.truth.intrinsics;
                for v in &b.truth.views {
                    assert!(v.render.camera.valid_count() * 4 >= v.render.camera.len());
                    for (idx, pc) in v.render.camera.iter_valid() {
                        let (u, w) = k.project(pc).unwrap();
                        let (uc, wc) = v.render.camera.pixel_center(idx);
                        assert!((u - uc).abs() < 1e-9 && (w - wc).abs() < 1e-9);
                        let pw = v.render.world.point(idx).unwrap();
                        assert!((v.pose.world_to_camera(pw) - pc).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn disjoint_views_have_zero_overlap() {
        let b = make_scene("line", 40, 0).unwrap();
        assert_eq!(b.truth.overlap.get(0, 39), 0.0);
    }
}
