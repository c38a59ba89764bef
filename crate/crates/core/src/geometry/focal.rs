use super::{GeometryError, Intrinsics, Pointmap};
use crate::scalar::Real;

/// Focal length from a pointmap expressed in its own camera frame.
///
/// Every pixel with a forward-facing point yields `f = (u − cx)·z/x` and
/// `f = (v − cy)·z/y`; the estimate is the median of the positive ones.
/// Pixels within half a pixel of the principal axis are skipped since their
/// ratio is ill-conditioned.
pub fn estimate_focal<T: Real>(pm: &Pointmap<T>, cx: T, cy: T) -> Result<Intrinsics<T>, GeometryError> {
    let half = T::lit(0.5);
    let mut estimates = Vec::new();
    for (idx, p) in pm.iter_valid() {
        if p.z <= T::zero() {
            continue;
        }
        let (u, v) = pm.pixel_center(idx);
        for (offset, coord) in [(u - cx, p.x), (v - cy, p.y)] {
            if offset.abs() >= half && coord.abs() > p.z * T::lit(1e-12) {
                let f = offset * p.z / coord;
                if f > T::zero() && f.is_finite() {
                    estimates.push(f);
                }
            }
        }
    }
    if estimates.is_empty() {
        return Err(GeometryError::DegeneratePointmap("no forward-facing points"));
    }
    estimates.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = estimates.len();
    let focal = if n % 2 == 1 {
        estimates[n / 2]
    } else {
        (estimates[n / 2 - 1] + estimates[n / 2]) * half
    };
    Intrinsics::new(focal, cx, cy)
}
