use nalgebra::Vector3;

/// Hits closer than this along the ray parameter are ignored.
const T_MIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum Surface {
    /// Rectangle (or infinite plane) spanned by orthonormal `u`, `v` around `center`.
    Plane { center: Vector3<f64>, u: Vector3<f64>, v: Vector3<f64>, half_u: f64, half_v: f64 },
    Sphere { center: Vector3<f64>, radius: f64 },
    /// Axis-aligned box.
    Cuboid { min: Vector3<f64>, max: Vector3<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Primitive {
    pub surface: Surface,
    pub color: [u8; 3],
}

impl Surface {
    pub fn plane(center: Vector3<f64>, u: Vector3<f64>, v: Vector3<f64>, half_u: f64, half_v: f64) -> Self {
        Surface::Plane { center, u: u.normalize(), v: v.normalize(), half_u, half_v }
    }

    /// Smallest ray parameter `t > 0` with `origin + t·dir` on the surface.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        match self {
            Surface::Plane { center, u, v, half_u, half_v } => {
                let n = u.cross(v);
                let denom = n.dot(dir);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let t = n.dot(&(center - origin)) / denom;
                if t <= T_MIN {
                    return None;
                }
                let rel = origin + dir * t - center;
                (rel.dot(u).abs() <= *half_u && rel.dot(v).abs() <= *half_v).then_some(t)
            }
            Surface::Sphere { center, radius } => {
                let oc = origin - center;
                let a = dir.norm_squared();
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - a * c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                [(-b - sq) / a, (-b + sq) / a].into_iter().find(|t| *t > T_MIN)
            }
            Surface::Cuboid { min, max } => {
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                for k in 0..3 {
                    if dir[k].abs() < 1e-300 {
                        if origin[k] < min[k] || origin[k] > max[k] {
                            return None;
                        }
                        continue;
                    }
                    let t1 = (min[k] - origin[k]) / dir[k];
                    let t2 = (max[k] - origin[k]) / dir[k];
                    t_near = t_near.max(t1.min(t2));
                    t_far = t_far.min(t1.max(t2));
                }
                if t_near > t_far {
                    return None;
                }
                [t_near, t_far].into_iter().find(|t| *t > T_MIN)
            }
        }
    }

    /// Radius of a ball around the origin containing the bounded surface.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Surface::Plane { center, half_u, half_v, .. } => center.norm() + half_u.hypot(*half_v),
            Surface::Sphere { center, radius } => center.norm() + radius,
            Surface::Cuboid { min, max } => min.norm().max(max.norm()) + (max - min).norm(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_hit_and_bounds() {
        let p = Surface::plane(Vector3::new(0.0, 0.0, 5.0), Vector3::x(), Vector3::y(), 1.0, 1.0);
        assert_eq!(p.intersect(&Vector3::zeros(), &Vector3::z()), Some(5.0));
        assert_eq!(p.intersect(&Vector3::zeros(), &Vector3::new(1.0, 0.0, 1.0)), None);
        assert_eq!(p.intersect(&Vector3::zeros(), &-Vector3::z()), None);
    }

    #[test]
    fn sphere_front_and_inside() {
        let s = Surface::Sphere { center: Vector3::new(0.0, 0.0, 4.0), radius: 1.0 };
        assert!((s.intersect(&Vector3::zeros(), &Vector3::z()).unwrap() - 3.0).abs() < 1e-15);
        assert!((s.intersect(&Vector3::new(0.0, 0.0, 4.0), &Vector3::z()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s.intersect(&Vector3::zeros(), &-Vector3::z()), None);
    }

    #[test]
    fn cuboid_slabs() {
        let b = Surface::Cuboid { min: Vector3::new(-1.0, -1.0, 2.0), max: Vector3::new(1.0, 1.0, 3.0) };
        assert_eq!(b.intersect(&Vector3::zeros(), &Vector3::z()), Some(2.0));
        assert_eq!(b.intersect(&Vector3::zeros(), &Vector3::new(0.0, 1.0, 0.0)), None);
        assert_eq!(b.intersect(&Vector3::new(0.0, 0.0, 2.5), &Vector3::z()), Some(0.5));
    }
}
