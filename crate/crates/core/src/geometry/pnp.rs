//! Perspective-n-point: pose of a camera from its own pixel grid and a
//! world-frame pointmap.
//!
//! The initial estimate comes from a linear solve (12-parameter projective DLT
//! for general scenes, plane-induced homography when the points are
//! coplanar), then Gauss–Newton refines the confidence-weighted reprojection
//! error in pixels.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3, Vector6};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ConfidenceMap, GeometryError, Intrinsics, Pointmap, Rotation, Se3Pose};
use crate::scalar::Real;

const MIN_CORRESPONDENCES: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RansacOptions {
    pub iterations: usize,
    pub inlier_threshold_px: f64,
    pub seed: u64,
}

impl Default for RansacOptions {
    fn default() -> Self {
        Self { iterations: 200, inlier_threshold_px: 2.0, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnpOptions {
    pub max_iterations: usize,
    /// Stop once the ∞-norm of the Gauss–Newton step drops below this.
    pub step_tolerance: f64,
    /// Off by default: the confidence threshold is the outlier filter.
    pub ransac: Option<RansacOptions>,
}

impl Default for PnpOptions {
    fn default() -> Self {
        Self { max_iterations: 50, step_tolerance: 1e-10, ransac: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnpSolution<T: Real> {
    /// Camera-to-world pose.
    pub pose: Se3Pose<T>,
    /// False when the iteration cap was hit first; `pose` is then the best
    /// iterate seen.
    pub converged: bool,
    pub iterations: usize,
    pub rms_reprojection_px: T,
    pub correspondences: usize,
}

/// Solves PnP with default options, weighting each pixel by its confidence
/// and dropping pixels below `conf_threshold`.
pub fn solve_pnp<T: Real>(
    pm: &Pointmap<T>,
    conf: &ConfidenceMap<T>,
    k: &Intrinsics<T>,
    conf_threshold: T,
) -> Result<PnpSolution<T>, GeometryError> {
    solve_pnp_with(pm, conf, k, conf_threshold, &PnpOptions::default())
}

pub fn solve_pnp_with<T: Real>(
    pm: &Pointmap<T>,
    conf: &ConfidenceMap<T>,
    k: &Intrinsics<T>,
    conf_threshold: T,
    opts: &PnpOptions,
) -> Result<PnpSolution<T>, GeometryError> {
    if !conf.matches(pm) {
        return Err(GeometryError::ShapeMismatch("confidence map does not match pointmap".into()));
    }
    let mut obs = Vec::new();
    for (idx, p) in pm.iter_valid() {
        let w = conf.values()[idx];
        if w >= conf_threshold {
            let (u, v) = pm.pixel_center(idx);
            obs.push(Observation { world: *p, u, v, weight: w });
        }
    }
    if obs.len() < MIN_CORRESPONDENCES {
        return Err(GeometryError::InsufficientCorrespondences {
            found: obs.len(),
            required: MIN_CORRESPONDENCES,
        });
    }

    let (init, used) = match &opts.ransac {
        None => (initial_estimate(&obs, k)?, obs),
        Some(r) => ransac(&obs, k, r)?,
    };
    let refined = refine(&used, k, init, opts);
    let (r_wc, t) = refined.estimate;
    let rotation = r_wc.transpose();
    let center = -rotation.apply(&t);
    let total_w = used.iter().fold(T::zero(), |a, o| a + o.weight);
    Ok(PnpSolution {
        pose: Se3Pose::new(rotation, center),
        converged: refined.converged,
        iterations: refined.iterations,
        rms_reprojection_px: (refined.cost / total_w).sqrt(),
        correspondences: used.len(),
    })
}

#[derive(Clone, Copy, Debug)]
struct Observation<T: Real> {
    world: Vector3<T>,
    u: T,
    v: T,
    weight: T,
}

/// World-to-camera rotation and translation: `x_cam = R x + t`.
type Estimate<T> = (Rotation<T>, Vector3<T>);

struct Refined<T: Real> {
    estimate: Estimate<T>,
    cost: T,
    converged: bool,
    iterations: usize,
}

fn weighted_centroid_and_scale<T: Real>(obs: &[Observation<T>]) -> (Vector3<T>, T, Matrix3<T>, T) {
    let total = obs.iter().fold(T::zero(), |a, o| a + o.weight);
    let c = obs.iter().fold(Vector3::zeros(), |a, o| a + o.world * o.weight) / total;
    let s = obs.iter().fold(T::zero(), |a, o| a + (o.world - c).norm() * o.weight) / total;
    let cov = obs.iter().fold(Matrix3::zeros(), |a, o| {
        let d = o.world - c;
        a + d * d.transpose() * o.weight
    }) / total;
    (c, s, cov, total)
}

fn initial_estimate<T: Real>(obs: &[Observation<T>], k: &Intrinsics<T>) -> Result<Estimate<T>, GeometryError> {
    let (c, s, cov, _) = weighted_centroid_and_scale(obs);
    if !(s > T::zero()) {
        return Err(GeometryError::DegenerateConfiguration("all points coincide"));
    }
    let eig = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|a, b| eig.eigenvalues[*b].partial_cmp(&eig.eigenvalues[*a]).expect("finite"));
    let (l_max, l_mid, l_min) =
        (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if l_mid <= l_max * T::lit(1e-12) {
        return Err(GeometryError::DegenerateConfiguration("points are collinear"));
    }
    let flatness = l_min / l_max;

    let mut candidates = Vec::new();
    if flatness > T::lit(1e-10) {
        if let Some(e) = dlt_general(obs, k, &c, s) {
            candidates.push(e);
        }
    }
    if flatness < T::lit(1e-3) {
        let e1: Vector3<T> = eig.eigenvectors.column(order[0]).into();
        let e2: Vector3<T> = eig.eigenvectors.column(order[1]).into();
        if let Some(e) = dlt_planar(obs, k, &c, s, &e1, &e2) {
            candidates.push(e);
        }
    }
    candidates
        .into_iter()
        .map(|e| (reprojection_cost(obs, k, &e), e))
        .filter(|(cost, _)| cost.is_finite())
        .min_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"))
        .map(|(_, e)| e)
        .ok_or(GeometryError::DegenerateConfiguration("no usable linear pose estimate"))
}

fn smallest_eigenvector<T: Real, const N: usize>(ata: SMatrix<T, N, N>) -> SVector<T, N> {
    let eig = DMatrix::from_column_slice(N, N, ata.as_slice()).symmetric_eigen();
    let mut best = 0;
    for i in 1..N {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    SVector::from_column_slice(eig.eigenvectors.column(best).as_slice())
}

fn dlt_general<T: Real>(obs: &[Observation<T>], k: &Intrinsics<T>, c: &Vector3<T>, s: T) -> Option<Estimate<T>> {
    let mut ata = SMatrix::<T, 12, 12>::zeros();
    for o in obs {
        let xn = (o.world - c) / s;
        let (x, y) = ((o.u - k.cx) / k.focal, (o.v - k.cy) / k.focal);
        let mut r1 = SVector::<T, 12>::zeros();
        let mut r2 = SVector::<T, 12>::zeros();
        for j in 0..3 {
            r1[j] = xn[j];
            r1[8 + j] = -x * xn[j];
            r2[4 + j] = xn[j];
            r2[8 + j] = -y * xn[j];
        }
        r1[3] = T::one();
        r1[11] = -x;
        r2[7] = T::one();
        r2[11] = -y;
        ata += (r1 * r1.transpose() + r2 * r2.transpose()) * o.weight;
    }
    let p = smallest_eigenvector(ata);
    let mut m = Matrix3::new(p[0], p[1], p[2], p[4], p[5], p[6], p[8], p[9], p[10]);
    let mut p4 = Vector3::new(p[3], p[7], p[11]);
    if m.determinant() < T::zero() {
        m = -m;
        p4 = -p4;
    }
    let svd = m.svd(true, true);
    let mean_sv = svd.singular_values.sum() / T::lit(3.0);
    if !(mean_sv > T::zero()) {
        return None;
    }
    let r = Rotation::project(&m);
    let mu = mean_sv / s;
    let q = p4 / mu;
    let t = q - r.apply(c);
    Some((r, t))
}

fn dlt_planar<T: Real>(
    obs: &[Observation<T>],
    k: &Intrinsics<T>,
    c: &Vector3<T>,
    s: T,
    e1: &Vector3<T>,
    e2: &Vector3<T>,
) -> Option<Estimate<T>> {
    let e3 = e1.cross(e2);
    let mut ata = SMatrix::<T, 9, 9>::zeros();
    for o in obs {
        let d = o.world - c;
        let (a, b) = (d.dot(e1) / s, d.dot(e2) / s);
        let (x, y) = ((o.u - k.cx) / k.focal, (o.v - k.cy) / k.focal);
        let r1 = SVector::<T, 9>::from_column_slice(&[
            a, b, T::one(), T::zero(), T::zero(), T::zero(), -x * a, -x * b, -x,
        ]);
        let r2 = SVector::<T, 9>::from_column_slice(&[
            T::zero(), T::zero(), T::zero(), a, b, T::one(), -y * a, -y * b, -y,
        ]);
        ata += (r1 * r1.transpose() + r2 * r2.transpose()) * o.weight;
    }
    let h = smallest_eigenvector(ata);
    let mut hm = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    // Centroid must land in front of the camera.
    if hm[(2, 2)] < T::zero() {
        hm = -hm;
    }
    let h1: Vector3<T> = hm.column(0).into();
    let h2: Vector3<T> = hm.column(1).into();
    let h3: Vector3<T> = hm.column(2).into();
    let mu_s = (h1.norm() + h2.norm()) / T::lit(2.0);
    if !(mu_s > T::zero()) {
        return None;
    }
    let b1 = h1 / mu_s;
    let b2 = h2 / mu_s;
    let rb = Rotation::project(&Matrix3::from_columns(&[b1, b2, b1.cross(&b2)]));
    let basis = Matrix3::from_columns(&[*e1, *e2, e3]);
    let r = Rotation::project(&(rb.matrix() * basis.transpose()));
    let mu = mu_s / s;
    let q = h3 / mu;
    let t = q - r.apply(c);
    Some((r, t))
}

fn reprojection_cost<T: Real>(obs: &[Observation<T>], k: &Intrinsics<T>, e: &Estimate<T>) -> T {
    let (r, t) = e;
    let mut cost = T::zero();
    for o in obs {
        let pc = r.apply(&o.world) + t;
        if pc.z <= T::zero() {
            return T::lit(f64::INFINITY);
        }
        let du = k.focal * pc.x / pc.z + k.cx - o.u;
        let dv = k.focal * pc.y / pc.z + k.cy - o.v;
        cost += (du * du + dv * dv) * o.weight;
    }
    cost
}

fn refine<T: Real>(obs: &[Observation<T>], k: &Intrinsics<T>, init: Estimate<T>, opts: &PnpOptions) -> Refined<T> {
    let mut est = init;
    let mut cost = reprojection_cost(obs, k, &est);
    let tol = T::lit(opts.step_tolerance);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let (r, t) = est;
        let mut h = SMatrix::<T, 6, 6>::zeros();
        let mut g = Vector6::zeros();
        for o in obs {
            let xr = r.apply(&o.world);
            let pc = xr + t;
            if pc.z <= T::zero() {
                continue;
            }
            let iz = T::one() / pc.z;
            let ru = k.focal * pc.x * iz + k.cx - o.u;
            let rv = k.focal * pc.y * iz + k.cy - o.v;
            let du = Vector3::new(k.focal * iz, T::zero(), -k.focal * pc.x * iz * iz);
            let dv = Vector3::new(T::zero(), k.focal * iz, -k.focal * pc.y * iz * iz);
            // d(pc)/d(omega) = -[xr]x, d(pc)/d(t) = I
            let ju_rot = xr.cross(&du);
            let jv_rot = xr.cross(&dv);
            let ju = Vector6::new(ju_rot.x, ju_rot.y, ju_rot.z, du.x, du.y, du.z);
            let jv = Vector6::new(jv_rot.x, jv_rot.y, jv_rot.z, dv.x, dv.y, dv.z);
            h += (ju * ju.transpose() + jv * jv.transpose()) * o.weight;
            g += (ju * ru + jv * rv) * o.weight;
        }
        let Some(chol) = h.cholesky() else { break };
        let step = -chol.solve(&g);

        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..20 {
            let s = step * alpha;
            let cand = (
                Rotation::exp(&Vector3::new(s[0], s[1], s[2])) * r,
                t + Vector3::new(s[3], s[4], s[5]),
            );
            let c = reprojection_cost(obs, k, &cand);
            if c <= cost {
                accepted = Some((cand, c));
                break;
            }
            alpha *= T::lit(0.5);
        }
        let small = step.amax() < tol;
        match accepted {
            Some((cand, c)) => {
                est = cand;
                cost = c;
            }
            None => {
                converged = small;
                break;
            }
        }
        if small {
            converged = true;
            break;
        }
    }
    Refined { estimate: est, cost, converged, iterations }
}

fn ransac<T: Real>(
    obs: &[Observation<T>],
    k: &Intrinsics<T>,
    opts: &RansacOptions,
) -> Result<(Estimate<T>, Vec<Observation<T>>), GeometryError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let thr2 = T::lit(opts.inlier_threshold_px * opts.inlier_threshold_px);
    let mut best: Option<(usize, Estimate<T>)> = None;
    for _ in 0..opts.iterations {
        let subset: Vec<_> = sample(&mut rng, obs.len(), MIN_CORRESPONDENCES).iter().map(|i| obs[i]).collect();
        let Ok(model) = initial_estimate(&subset, k) else { continue };
        let inliers = obs.iter().filter(|o| is_inlier(o, k, &model, thr2)).count();
        if best.as_ref().is_none_or(|(n, _)| inliers > *n) {
            best = Some((inliers, model));
        }
    }
    let (_, model) = best.ok_or(GeometryError::DegenerateConfiguration("no RANSAC hypothesis"))?;
    let inliers: Vec<_> = obs.iter().copied().filter(|o| is_inlier(o, k, &model, thr2)).collect();
    if inliers.len() < MIN_CORRESPONDENCES {
        return Err(GeometryError::InsufficientCorrespondences {
            found: inliers.len(),
            required: MIN_CORRESPONDENCES,
        });
    }
    let init = initial_estimate(&inliers, k).unwrap_or(model);
    Ok((init, inliers))
}

fn is_inlier<T: Real>(o: &Observation<T>, k: &Intrinsics<T>, e: &Estimate<T>, thr2: T) -> bool {
    let pc = e.0.apply(&o.world) + e.1;
    match k.project(&pc) {
        Some((u, v)) => (u - o.u) * (u - o.u) + (v - o.v) * (v - o.v) < thr2,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Renders a bumpy surface seen by `pose` and returns the world-frame map.
    fn synth(pose: &Se3Pose<f64>, k: &Intrinsics<f64>, size: usize, planar: bool) -> Pointmap<f64> {
        Pointmap::from_fn(size, size, |c, r| {
            let ray = k.ray(c as f64 + 0.5, r as f64 + 0.5);
            let depth = if planar { 4.0 } else { 4.0 + 0.5 * ((c as f64) * 0.4).sin() * ((r as f64) * 0.3).cos() };
            Some(pose.camera_to_world(&(ray * depth)))
        })
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> Se3Pose<f64> {
        let w = Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-3.0..3.0));
        let c = Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        Se3Pose::new(Rotation::exp(&w), c)
    }

    #[test]
    fn exact_recovery_general_and_planar() {
        let k = Intrinsics::centered(24.0, 24, 24).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for planar in [false, true] {
            for _ in 0..10 {
                let pose = random_pose(&mut rng);
                let pm = synth(&pose, &k, 24, planar);
                let conf = ConfidenceMap::uniform(24, 24, 1.0);
                let sol = solve_pnp(&pm, &conf, &k, 0.0).unwrap();
                let rot_err = (sol.pose.rotation.transpose() * pose.rotation).angle();
                assert!(rot_err < 1e-6, "planar={planar} rotation error {rot_err}");
                assert!((sol.pose.center - pose.center).norm() < 1e-6);
                assert!(sol.converged);
            }
        }
    }

    #[test]
    fn camera_frame_map_gives_identity() {
        let k = Intrinsics::centered(16.0, 16, 16).unwrap();
        let pm = synth(&Se3Pose::identity(), &k, 16, false);
        let sol = solve_pnp(&pm, &ConfidenceMap::uniform(16, 16, 2.0), &k, 0.0).unwrap();
        assert!(sol.pose.rotation.angle() < 1e-9);
        assert!(sol.pose.center.norm() < 1e-9);
    }

    #[test]
    fn too_few_confident_pixels() {
        let k = Intrinsics::centered(16.0, 16, 16).unwrap();
        let pm = synth(&Se3Pose::identity(), &k, 16, false);
        let mut c = vec![0.1; 256];
        for v in c.iter_mut().take(5) {
            *v = 1.0;
        }
        let conf = ConfidenceMap::new(16, 16, c).unwrap();
        let err = solve_pnp(&pm, &conf, &k, 0.5);
        assert_eq!(err, Err(GeometryError::InsufficientCorrespondences { found: 5, required: 6 }));
    }

    #[test]
    fn ransac_rejects_gross_outliers() {
        let k = Intrinsics::centered(20.0, 20, 20).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pose = random_pose(&mut rng);
        let clean = synth(&pose, &k, 20, false);
        let (w, h, mut xyz, valid) = clean.into_parts();
        for p in xyz.iter_mut().step_by(7) {
            *p += Vector3::new(rng.random_range(-3.0..3.0), 2.0, rng.random_range(-3.0..3.0));
        }
        let pm = Pointmap::new(w, h, xyz, valid).unwrap();
        let conf = ConfidenceMap::uniform(20, 20, 1.0);
        let opts = PnpOptions { ransac: Some(RansacOptions::default()), ..Default::default() };
        let sol = solve_pnp_with(&pm, &conf, &k, 0.0, &opts).unwrap();
        assert!((sol.pose.rotation.transpose() * pose.rotation).angle() < 1e-6);
        assert!((sol.pose.center - pose.center).norm() < 1e-6);
    }
}
