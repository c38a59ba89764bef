use super::mst::prim;
use super::{GraphError, SimilarityMatrix, SpanningForest, ViewId};

/// Minimum spanning forest with one tree per root: Prim on the graph extended
/// by a virtual vertex joined to every root at zero cost, with root–root and
/// virtual–non-root edges removed.
pub fn build_forest(sim: &SimilarityMatrix, roots: &[ViewId]) -> Result<SpanningForest, GraphError> {
    let n = sim.n();
    if roots.is_empty() {
        return Err(GraphError::InvalidRoots("empty root set".into()));
    }
    let mut is_root = vec![false; n];
    for &r in roots {
        if r >= n {
            return Err(GraphError::InvalidRoots(format!("root {r} out of range for {n} views")));
        }
        if is_root[r] {
            return Err(GraphError::InvalidRoots(format!("root {r} listed twice")));
        }
        is_root[r] = true;
    }
    let virt = n;
    let edges = prim(n + 1, virt, |a, b| {
        if a == virt || b == virt {
            let other = if a == virt { b } else { a };
            if is_root[other] { 0.0 } else { f64::INFINITY }
        } else if is_root[a] && is_root[b] {
            f64::INFINITY
        } else {
            sim.distance(a, b)
        }
    });
    let mut parent = vec![None; n];
    for (p, c) in edges {
        if p != virt {
            parent[c] = Some(p);
        }
    }
    SpanningForest::from_parents(parent)
}
