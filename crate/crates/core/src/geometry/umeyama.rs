use nalgebra::{Matrix3, Vector3};

use super::{GeometryError, Rotation, Sim3Transform};
use crate::scalar::Real;

/// Weighted least-squares similarity from `src` to `dst` (Umeyama 1991):
/// minimizes `Σ wᵢ ‖s R srcᵢ + t − dstᵢ‖²`.
pub fn umeyama_sim3<T: Real>(
    src: &[Vector3<T>],
    dst: &[Vector3<T>],
    weights: &[T],
) -> Result<Sim3Transform<T>, GeometryError> {
    if src.len() != dst.len() || src.len() != weights.len() {
        return Err(GeometryError::ShapeMismatch(format!(
            "{} source, {} target, {} weights",
            src.len(),
            dst.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= T::zero() && w.is_finite())) {
        return Err(GeometryError::InvalidValue("weights must be finite and non-negative".into()));
    }
    let used = weights.iter().filter(|w| **w > T::zero()).count();
    if used < 3 {
        return Err(GeometryError::DegenerateConfiguration("fewer than three weighted points"));
    }
    let total = weights.iter().fold(T::zero(), |a, w| a + *w);

    let mut mu_s = Vector3::zeros();
    let mut mu_d = Vector3::zeros();
    for ((s, d), w) in src.iter().zip(dst).zip(weights) {
        mu_s += s * *w;
        mu_d += d * *w;
    }
    mu_s /= total;
    mu_d /= total;

    let mut cov = Matrix3::zeros();
    let mut src_cov = Matrix3::zeros();
    let mut var_s = T::zero();
    for ((s, d), w) in src.iter().zip(dst).zip(weights) {
        let sc = s - mu_s;
        let dc = d - mu_d;
        cov += (dc * sc.transpose()) * *w;
        src_cov += (sc * sc.transpose()) * *w;
        var_s += sc.norm_squared() * *w;
    }
    cov /= total;
    src_cov /= total;
    var_s /= total;

    let mut eig = src_cov.symmetric_eigenvalues().iter().copied().collect::<Vec<_>>();
    eig.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let tol = T::structural_tol() * T::lit(1e-3);
    if !(eig[0] > T::zero()) || eig[1] <= eig[0] * tol {
        return Err(GeometryError::DegenerateConfiguration("source points are collinear or coincident"));
    }

    let svd = cov.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut sign = Matrix3::identity();
    if u.determinant() * v_t.determinant() < T::zero() {
        sign[(2, 2)] = -T::one();
    }
    let r = u * sign * v_t;
    let trace_ds = (0..3).fold(T::zero(), |acc, i| acc + svd.singular_values[i] * sign[(i, i)]);
    let scale = trace_ds / var_s;
    if !(scale > T::zero()) {
        return Err(GeometryError::DegenerateConfiguration("non-positive similarity scale"));
    }
    let rotation = Rotation::from_matrix_unchecked(r);
    let translation = mu_d - rotation.apply(&mu_s) * scale;
    Ok(Sim3Transform { scale, rotation, translation })
}

/// `Σ wᵢ ‖T(srcᵢ) − dstᵢ‖²`.
pub fn weighted_alignment_cost<T: Real>(
    transform: &Sim3Transform<T>,
    src: &[Vector3<T>],
    dst: &[Vector3<T>],
    weights: &[T],
) -> T {
    src.iter()
        .zip(dst)
        .zip(weights)
        .fold(T::zero(), |acc, ((s, d), w)| acc + (transform.apply(s) - d).norm_squared() * *w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vector3<f64>> {
        (0..n).map(|_| Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect()
    }

    #[test]
    fn identity_on_equal_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = random_points(&mut rng, 20);
        let t = umeyama_sim3(&pts, &pts, &[1.0; 20]).unwrap();
        assert!((t.scale - 1.0).abs() < 1e-12);
        assert!(t.rotation.angle() < 1e-12);
        assert!(t.translation.norm() < 1e-12);
    }

    #[test]
    fn recovers_known_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let pts = random_points(&mut rng, 30);
            let truth = Sim3Transform::new(
                rng.random_range(0.1..5.0),
                crate::geometry::random_rotation_uniform(&mut rng),
                Vector3::new(rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0), 1.0),
            )
            .unwrap();
            let dst: Vec<_> = pts.iter().map(|p| truth.apply(p)).collect();
            let est = umeyama_sim3(&pts, &dst, &vec![1.0; 30]).unwrap();
            let rot_err = (est.rotation.transpose() * truth.rotation).angle();
            assert!(rot_err < 1e-9, "rotation error {rot_err}");
            assert!((est.scale - truth.scale).abs() < 1e-9 * truth.scale);
            assert!((est.translation - truth.translation).norm() < 1e-9);
        }
    }

    #[test]
    fn collinear_source_is_degenerate() {
        let pts: Vec<_> = (0..10).map(|i| Vector3::new(i as f64, 2.0 * i as f64, -(i as f64))).collect();
        let err = umeyama_sim3(&pts, &pts, &[1.0; 10]);
        assert!(matches!(err, Err(GeometryError::DegenerateConfiguration(_))));
    }

    #[test]
    fn zero_weights_exclude_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 12);
        let mut dst = pts.clone();
        dst[0] += Vector3::new(100.0, 0.0, 0.0);
        let mut w = vec![1.0; 12];
        w[0] = 0.0;
        let t = umeyama_sim3(&pts, &dst, &w).unwrap();
        assert!(t.rotation.angle() < 1e-12 && (t.scale - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_perturbations_never_decrease_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let src = random_points(&mut rng, 40);
        let dst: Vec<_> = random_points(&mut rng, 40).iter().zip(&src).map(|(n, s)| s * 1.7 + n * 0.3).collect();
        let w: Vec<f64> = (0..40).map(|_| rng.random_range(0.1..2.0)).collect();
        let best = umeyama_sim3(&src, &dst, &w).unwrap();
        let base = weighted_alignment_cost(&best, &src, &dst, &w);
        let h = 1e-4;
        // scale, 3 rotation, 3 translation directions, each ±.
        for k in 0..7 {
            for sign in [-1.0, 1.0] {
                let mut t = best;
                match k {
                    0 => t.scale *= 1.0 + sign * h,
                    1..=3 => {
                        let mut w3 = Vector3::zeros();
                        w3[k - 1] = sign * h;
                        t.rotation = Rotation::exp(&w3) * t.rotation;
                    }
                    _ => t.translation[k - 4] += sign * h,
                }
                assert!(weighted_alignment_cost(&t, &src, &dst, &w) >= base);
            }
        }
    }
}
