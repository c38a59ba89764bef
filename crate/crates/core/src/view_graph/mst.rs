use super::{GraphError, SimilarityMatrix, SpanningForest, SpanningTree, ViewId};

/// Undirected minimum-spanning-tree edges under weights `1 − s` (dense Prim).
pub fn mst_edges(sim: &SimilarityMatrix) -> Vec<(ViewId, ViewId)> {
    prim(sim.n(), 0, |a, b| sim.distance(a, b))
}

/// View with the largest total similarity, lowest id on ties.
pub fn root_by_similarity(sim: &SimilarityMatrix) -> ViewId {
    let mut best = 0;
    let mut best_sum = f64::NEG_INFINITY;
    for i in 0..sim.n() {
        let s = sim.row_sum(i);
        if s > best_sum {
            best_sum = s;
            best = i;
        }
    }
    best
}

pub fn build_mst(sim: &SimilarityMatrix) -> SpanningTree {
    build_mst_rooted(sim, root_by_similarity(sim)).expect("root in range")
}

pub fn build_mst_rooted(sim: &SimilarityMatrix, root: ViewId) -> Result<SpanningTree, GraphError> {
    if root >= sim.n() {
        return Err(GraphError::InvalidRoots(format!("root {root} out of range for {} views", sim.n())));
    }
    let forest = SpanningForest::orient(sim.n(), &mst_edges(sim), &[root])?;
    SpanningTree::try_from(forest)
}

/// Dense Prim from `start` over `n` vertices; returns `(parent, child)` edges
/// in insertion order.
pub(crate) fn prim(n: usize, start: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut link = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    key[start] = 0.0;
    for _ in 0..n {
        let mut v = usize::MAX;
        for u in 0..n {
            if !in_tree[u] && (v == usize::MAX || key[u] < key[v]) {
                v = u;
            }
        }
        in_tree[v] = true;
        if link[v] != usize::MAX {
            edges.push((link[v], v));
        }
        for u in 0..n {
            if !in_tree[u] {
                let w = weight(v, u);
                if w < key[u] {
                    key[u] = w;
                    link[u] = v;
                }
            }
        }
    }
    edges
}
