use nalgebra::Vector3;

/// Static 3-d tree for exact nearest-neighbour queries.
pub struct KdTree {
    points: Vec<Vector3<f64>>,
    /// Implicit balanced tree: the median of `order[lo..hi]` is the node,
    /// split on axis `depth % 3`.
    order: Vec<usize>,
}

impl KdTree {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(&points, &mut order, 0);
        Self { points, order }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and distance of the closest point; `None` when empty.
    pub fn nearest(&self, q: &Vector3<f64>) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(q, 0, self.order.len(), 0, &mut best);
        Some((best.0, best.1.sqrt()))
    }

    fn search(&self, q: &Vector3<f64>, lo: usize, hi: usize, depth: usize, best: &mut (usize, f64)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        let d2 = (p - q).norm_squared();
        if d2 < best.1 || (d2 == best.1 && idx < best.0) {
            *best = (idx, d2);
        }
        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(q, near.0, near.1, depth + 1, best);
        if diff * diff <= best.1 {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build(points: &[Vector3<f64>], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |a, b| points[*a][axis].total_cmp(&points[*b][axis]));
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_points(max: usize) -> impl Strategy<Value = Vec<Vector3<f64>>> {
        proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 1..max)
            .prop_map(|v| v.into_iter().map(|(x, y, z)| Vector3::new(x, y, z)).collect())
    }

    proptest! {
        #[test]
        fn matches_brute_force(points in arb_points(200), queries in arb_points(20)) {
            let tree = KdTree::new(points.clone());
            for q in &queries {
                let brute = points.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min);
                let (i, d) = tree.nearest(q).unwrap();
                prop_assert!((d - brute).abs() < 1e-12);
                prop_assert!(((points[i] - q).norm() - d).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicates_and_empty() {
        let p = Vector3::new(1.0, 1.0, 1.0);
        let tree = KdTree::new(vec![p; 10]);
        assert_eq!(tree.nearest(&Vector3::zeros()).unwrap().1, 3f64.sqrt());
        assert!(KdTree::new(Vec::new()).nearest(&p).is_none());
    }
}
