use super::{SpanningForest, SpanningTree};

/// Applies `passes` rounds of depth halving: every view at an even depth ≥ 2
/// is relinked to its grandparent, all views simultaneously. A view at depth
/// `d` ends at depth `⌈d/2⌉` after one pass.
pub fn compress_forest(forest: &SpanningForest, passes: usize) -> SpanningForest {
    let mut current = forest.clone();
    for _ in 0..passes {
        if current.max_depth() < 2 {
            break;
        }
        let parent: Vec<_> = (0..current.n())
            .map(|v| {
                let d = current.depth(v);
                match current.parent(v) {
                    Some(p) if d >= 2 && d.is_multiple_of(2) => current.parent(p),
                    other => other,
                }
            })
            .collect();
        current = SpanningForest::from_parents(parent).expect("relinking to an ancestor keeps the forest valid");
    }
    current
}

pub fn compress_tree(tree: &SpanningTree, passes: usize) -> SpanningTree {
    SpanningTree::try_from(compress_forest(tree, passes)).expect("roots are unchanged")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain(n: usize) -> SpanningTree {
        SpanningTree::from_parents((0..n).map(|v| v.checked_sub(1)).collect()).unwrap()
    }

    #[test]
    fn chain_halves_per_pass() {
        let t = chain(51);
        assert_eq!(t.max_depth(), 50);
        assert_eq!(compress_tree(&t, 1).max_depth(), 25);
        assert_eq!(compress_tree(&t, 2).max_depth(), 13);
        assert_eq!(compress_tree(&t, 0), t);
        let fully = compress_tree(&t, 10);
        assert_eq!(fully.max_depth(), 1);
    }

    #[test]
    fn fifty_view_chain_to_depth_25() {
        let t = chain(50);
        assert_eq!(t.max_depth(), 49);
        assert_eq!(compress_tree(&t, 1).max_depth(), 25);
    }

    proptest! {
        #[test]
        fn depth_becomes_ceil_half(parents in proptest::collection::vec(0usize..1000, 1..40)) {
            // random recursive tree: parent of v+1 drawn among 0..=v
            let mut p = vec![None];
            for (v, r) in parents.iter().enumerate() {
                p.push(Some(r % (v + 1)));
            }
            let t = SpanningTree::from_parents(p).unwrap();
            let c = compress_tree(&t, 1);
            for v in 0..t.n() {
                prop_assert_eq!(c.depth(v), t.depth(v).div_ceil(2));
                // every new parent is an ancestor in the original tree
                if let Some(np) = c.parent(v) {
                    let mut a = t.parent(v);
                    let mut found = false;
                    while let Some(x) = a {
                        if x == np { found = true; break; }
                        a = t.parent(x);
                    }
                    prop_assert!(found);
                }
            }
        }
    }
}
