//! Reconstruction topology: which view serves as reference for which.
//!
//! Edge weights are `1 − similarity` everywhere. Every tie is broken towards
//! the lowest view id so that all outputs are deterministic.

mod compress;
mod forest;
mod kmedoids;
mod mst;
mod similarity;
mod spt;
mod tree;

pub use compress::{compress_forest, compress_tree};
pub use forest::build_forest;
pub use kmedoids::{kmedoids_cost, kmedoids_roots};
pub use mst::{build_mst, build_mst_rooted, mst_edges, root_by_similarity};
pub use similarity::SimilarityMatrix;
pub use spt::build_spt;
pub use tree::{SpanningForest, SpanningTree, TreeSummary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ViewId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NotSquare { rows: usize, row: usize, cols: usize },
    #[error("asymmetry {diff:e} at ({i}, {j}) exceeds tolerance")]
    AsymmetryTooLarge { i: usize, j: usize, diff: f64 },
    #[error("invalid similarity matrix: {0}")]
    InvalidSimilarity(String),
    #[error("invalid root set: {0}")]
    InvalidRoots(String),
    #[error("invalid cluster count {k} for {n} views")]
    InvalidClusterCount { k: usize, n: usize },
    #[error("malformed tree: {0}")]
    MalformedTree(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TreeKind {
    #[default]
    Mst,
    Spt,
}

impl std::str::FromStr for TreeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mst" => Ok(Self::Mst),
            "spt" => Ok(Self::Spt),
            other => Err(format!("unknown tree kind '{other}' (expected mst or spt)")),
        }
    }
}

/// Single tree of `kind` (rooted at `root`, or the most similar view), or an
/// MST forest on `roots` k-medoids keyframes when `roots > 1`.
pub fn spanning_forest(
    sim: &SimilarityMatrix,
    kind: TreeKind,
    root: Option<ViewId>,
    roots: usize,
    seed: u64,
) -> Result<SpanningForest, GraphError> {
    if roots > 1 {
        if kind != TreeKind::Mst || root.is_some() {
            return Err(GraphError::InvalidRoots("forests use MST edges on k-medoids roots".into()));
        }
        return build_forest(sim, &kmedoids_roots(sim, roots, seed)?);
    }
    let root = root.unwrap_or_else(|| root_by_similarity(sim));
    let tree = match kind {
        TreeKind::Mst => build_mst_rooted(sim, root)?,
        TreeKind::Spt => build_spt(sim, root)?,
    };
    Ok(tree.into_forest())
}
