use super::RegistrationError;
use crate::view_graph::{compress_forest, SimilarityMatrix, SpanningForest, ViewId};

/// Forest to traverse (after compression) and the bootstrap pair of each tree.
#[derive(Clone, Debug, PartialEq)]
pub struct RegistrationPlan {
    forest: SpanningForest,
    compression_k: usize,
    bootstrap: Vec<(ViewId, ViewId)>,
}

impl RegistrationPlan {
    /// Compresses `forest` by `compression_k` passes. The first tree is
    /// bootstrapped from its root and the root's most similar child (lowest
    /// id without a similarity matrix, or the second root for a singleton
    /// first tree); every other tree from the first root and its own root.
    pub fn new(
        forest: &SpanningForest,
        compression_k: usize,
        sim: Option<&SimilarityMatrix>,
    ) -> Result<Self, RegistrationError> {
        let n = forest.n();
        if n < 2 {
            return Err(RegistrationError::TooFewViews(n));
        }
        let forest = compress_forest(forest, compression_k);
        let roots = forest.roots().to_vec();
        let children = forest.children();
        let root0 = roots[0];
        let partner = children[root0]
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let (sa, sb) = sim.map_or((0.0, 0.0), |s| (s.get(root0, a), s.get(root0, b)));
                sa.total_cmp(&sb).then(b.cmp(&a))
            })
            .unwrap_or_else(|| roots[1]);
        let mut bootstrap = vec![(root0, partner)];
        bootstrap.extend(roots[1..].iter().map(|&r| (root0, r)));
        Ok(Self { forest, compression_k, bootstrap })
    }

    pub fn forest(&self) -> &SpanningForest {
        &self.forest
    }

    pub fn compression_k(&self) -> usize {
        self.compression_k
    }

    pub fn n(&self) -> usize {
        self.forest.n()
    }

    pub fn bootstrap(&self) -> &[(ViewId, ViewId)] {
        &self.bootstrap
    }

    pub fn global_root(&self) -> ViewId {
        self.forest.roots()[0]
    }

    /// Parents before children, layer by layer, ascending ids within a layer.
    pub fn traversal(&self) -> Vec<ViewId> {
        self.forest.layers().concat()
    }
}
