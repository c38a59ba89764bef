use super::{GraphError, SimilarityMatrix, SpanningForest, SpanningTree, ViewId};

/// Shortest-path tree from `root` under weights `1 − s` (dense Dijkstra).
pub fn build_spt(sim: &SimilarityMatrix, root: ViewId) -> Result<SpanningTree, GraphError> {
    let n = sim.n();
    if root >= n {
        return Err(GraphError::InvalidRoots(format!("root {root} out of range for {n} views")));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut parent = vec![None; n];
    dist[root] = 0.0;
    for _ in 0..n {
        let mut v = usize::MAX;
        for u in 0..n {
            if !done[u] && (v == usize::MAX || dist[u] < dist[v]) {
                v = u;
            }
        }
        done[v] = true;
        for u in 0..n {
            if !done[u] {
                let alt = dist[v] + sim.distance(v, u);
                if alt < dist[u] {
                    dist[u] = alt;
                    parent[u] = Some(v);
                }
            }
        }
    }
    SpanningTree::try_from(SpanningForest::from_parents(parent)?)
}
