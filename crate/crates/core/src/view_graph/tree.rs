use std::collections::VecDeque;
use std::fmt::Write as _;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::{GraphError, ViewId};

/// Rooted forest over views `0..n`. Every view has exactly one parent except
/// the roots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningForest {
    parent: Vec<Option<ViewId>>,
    depth: Vec<usize>,
    roots: Vec<ViewId>,
}

impl SpanningForest {
    /// Validates a parent array (acyclic, in range) and derives depths.
    pub fn from_parents(parent: Vec<Option<ViewId>>) -> Result<Self, GraphError> {
        let n = parent.len();
        if n == 0 {
            return Err(GraphError::MalformedTree("empty parent array".into()));
        }
        for (v, p) in parent.iter().enumerate() {
            match p {
                Some(p) if *p >= n => {
                    return Err(GraphError::MalformedTree(format!("parent {p} of view {v} is out of range")))
                }
                Some(p) if *p == v => return Err(GraphError::MalformedTree(format!("view {v} is its own parent"))),
                _ => {}
            }
        }
        let mut depth: Vec<Option<usize>> = vec![None; n];
        for start in 0..n {
            let mut chain = Vec::new();
            let mut v = start;
            let base = loop {
                if let Some(d) = depth[v] {
                    break d;
                }
                if chain.len() > n {
                    return Err(GraphError::MalformedTree(format!("cycle through view {start}")));
                }
                match parent[v] {
                    None => {
                        depth[v] = Some(0);
                        break 0;
                    }
                    Some(p) => {
                        chain.push(v);
                        v = p;
                    }
                }
            };
            for (k, u) in chain.iter().rev().enumerate() {
                depth[*u] = Some(base + k + 1);
            }
        }
        let roots = (0..n).filter(|v| parent[*v].is_none()).collect();
        Ok(Self { parent, depth: depth.into_iter().map(|d| d.expect("all depths resolved")).collect(), roots })
    }

    /// Orients an undirected edge list away from the given roots.
    pub(crate) fn orient(n: usize, edges: &[(ViewId, ViewId)], roots: &[ViewId]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for &r in roots {
            seen[r] = true;
            queue.push_back(r);
        }
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    parent[u] = Some(v);
                    queue.push_back(u);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(GraphError::MalformedTree(format!("view {v} is unreachable")));
        }
        Self::from_parents(parent)
    }

    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: ViewId) -> Option<ViewId> {
        self.parent[v]
    }

    pub fn parents(&self) -> &[Option<ViewId>] {
        &self.parent
    }

    pub fn depth(&self, v: ViewId) -> usize {
        self.depth[v]
    }

    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    pub fn roots(&self) -> &[ViewId] {
        &self.roots
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn root_of(&self, mut v: ViewId) -> ViewId {
        while let Some(p) = self.parent[v] {
            v = p;
        }
        v
    }

    /// Children of every view, ascending ids.
    pub fn children(&self) -> Vec<Vec<ViewId>> {
        let mut out = vec![Vec::new(); self.n()];
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = p {
                out[*p].push(v);
            }
        }
        out
    }

    /// Views of the tree rooted at `root`, ascending ids.
    pub fn members(&self, root: ViewId) -> Vec<ViewId> {
        (0..self.n()).filter(|v| self.root_of(*v) == root).collect()
    }

    /// Views grouped by depth, ascending ids within each layer.
    pub fn layers(&self) -> Vec<Vec<ViewId>> {
        let mut out = vec![Vec::new(); self.max_depth() + 1];
        for (v, d) in self.depth.iter().enumerate() {
            out[*d].push(v);
        }
        out
    }

    /// `(parent, child)` pairs ordered by child id.
    pub fn edges(&self) -> Vec<(ViewId, ViewId)> {
        self.parent.iter().enumerate().filter_map(|(v, p)| p.map(|p| (p, v))).collect()
    }

    pub fn depth_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.max_depth() + 1];
        for d in &self.depth {
            hist[*d] += 1;
        }
        hist
    }

    pub fn summary(&self) -> TreeSummary {
        TreeSummary {
            n: self.n(),
            roots: self.roots.clone(),
            parent: self.parent.clone(),
            depth: self.depth.clone(),
            max_depth: self.max_depth(),
            depth_histogram: self.depth_histogram(),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph views {\n");
        for r in &self.roots {
            let _ = writeln!(s, "  {r} [shape=doublecircle];");
        }
        for (p, c) in self.edges() {
            let _ = writeln!(s, "  {p} -> {c};");
        }
        s.push_str("}\n");
        s
    }
}

/// Forest with a single root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningTree(SpanningForest);

impl SpanningTree {
    pub fn from_parents(parent: Vec<Option<ViewId>>) -> Result<Self, GraphError> {
        Self::try_from(SpanningForest::from_parents(parent)?)
    }

    pub fn root(&self) -> ViewId {
        self.0.roots[0]
    }

    pub fn into_forest(self) -> SpanningForest {
        self.0
    }
}

impl TryFrom<SpanningForest> for SpanningTree {
    type Error = GraphError;
    fn try_from(f: SpanningForest) -> Result<Self, GraphError> {
        if f.roots.len() != 1 {
            return Err(GraphError::MalformedTree(format!("expected one root, found {}", f.roots.len())));
        }
        Ok(Self(f))
    }
}

impl From<SpanningTree> for SpanningForest {
    fn from(t: SpanningTree) -> Self {
        t.0
    }
}

impl Deref for SpanningTree {
    type Target = SpanningForest;
    fn deref(&self) -> &SpanningForest {
        &self.0
    }
}

/// Serializable description of a forest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub n: usize,
    pub roots: Vec<ViewId>,
    pub parent: Vec<Option<ViewId>>,
    pub depth: Vec<usize>,
    pub max_depth: usize,
    pub depth_histogram: Vec<usize>,
}
