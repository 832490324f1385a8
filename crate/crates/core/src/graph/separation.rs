//! d-separation and minimal trek separation.

use std::collections::BTreeSet;

use super::paths::treks_between;
use super::{GraphError, ProcessGraph, VertexSet};

fn check_disjoint(g: &ProcessGraph, sets: &[(&str, VertexSet)]) -> Result<(), GraphError> {
    for (i, &(a, sa)) in sets.iter().enumerate() {
        for &(b, sb) in &sets[i + 1..] {
            let both = sa.intersection(sb);
            if !both.is_empty() {
                return Err(GraphError::Overlap(format!("{a} and {b} share {:?}", g.labels_of(both))));
            }
        }
    }
    Ok(())
}

/// Whether `z` d-separates `x` from `y`.
pub fn d_separated(g: &ProcessGraph, x: VertexSet, y: VertexSet, z: VertexSet) -> Result<bool, GraphError> {
    g.require_acyclic()?;
    check_disjoint(g, &[("X", x), ("Y", y), ("Z", z)])?;
    let anc_z = g.ancestors(z);
    // visited[dir] marks (vertex, direction) states: 0 = moving up, 1 = moving down
    let mut visited = [VertexSet::EMPTY; 2];
    let mut stack: Vec<(usize, usize)> = x.iter().map(|v| (v, 0)).collect();
    while let Some((v, dir)) = stack.pop() {
        if visited[dir].contains(v) {
            continue;
        }
        visited[dir].insert(v);
        if !z.contains(v) && y.contains(v) {
            return Ok(false);
        }
        let up = dir == 0;
        if !z.contains(v) {
            for c in g.children(v).iter() {
                stack.push((c, 1));
            }
            if up {
                for p in g.parents(v).iter() {
                    stack.push((p, 0));
                }
            }
        }
        if !up && anc_z.contains(v) {
            for p in g.parents(v).iter() {
                stack.push((p, 0));
            }
        }
    }
    Ok(true)
}

/// Distinct (left, right) vertex sets over all treks from `x` to `y`, with
/// dominated pairs removed: blocking the kept pairs blocks every trek.
pub fn trek_sides(g: &ProcessGraph, x: VertexSet, y: VertexSet) -> Result<Vec<(VertexSet, VertexSet)>, GraphError> {
    g.require_acyclic()?;
    let mut all = BTreeSet::new();
    for a in x.iter() {
        for b in y.iter() {
            for t in treks_between(g, a, b) {
                all.insert((t.left_set(), t.right_set()));
            }
        }
    }
    let all: Vec<_> = all.into_iter().collect();
    let kept = all
        .iter()
        .filter(|&&(l, r)| !all.iter().any(|&(l2, r2)| (l2, r2) != (l, r) && l2.is_subset(l) && r2.is_subset(r)))
        .copied()
        .collect();
    Ok(kept)
}

/// A pair `(zx, zy)` such that every trek from X to Y meets `zx` on its left
/// side or `zy` on its right side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TSeparation {
    pub size: usize,
    pub zx: VertexSet,
    pub zy: VertexSet,
}

/// A t-separating pair of minimum total size.
///
/// Sizes are tried in increasing order; within a size, larger `zx` first and
/// then lexicographic order of `zx` and `zy`.
pub fn t_separation_min(g: &ProcessGraph, x: VertexSet, y: VertexSet) -> Result<TSeparation, GraphError> {
    let sides = trek_sides(g, x, y)?;
    let left_support = sides.iter().fold(VertexSet::EMPTY, |acc, &(l, _)| acc.union(l));
    let right_support = sides.iter().fold(VertexSet::EMPTY, |acc, &(_, r)| acc.union(r));
    let blocks =
        |zx: VertexSet, zy: VertexSet| sides.iter().all(|&(l, r)| !l.is_disjoint(zx) || !r.is_disjoint(zy));
    for s in 0.. {
        for kx in (0..=s).rev() {
            let ky = s - kx;
            if kx > left_support.len() || ky > right_support.len() {
                continue;
            }
            let right_sets = right_support.subsets_of_size(ky);
            for zx in left_support.subsets_of_size(kx) {
                for &zy in &right_sets {
                    if blocks(zx, zy) {
                        return Ok(TSeparation { size: s, zx, zy });
                    }
                }
            }
        }
    }
    unreachable!("zx = left support always separates")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_edge() {
        let g = ProcessGraph::observed_only(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        let s = |v: usize| VertexSet::singleton(v);
        assert!(d_separated(&g, s(0), s(2), s(1)).unwrap());
        assert!(!d_separated(&g, s(0), s(2), VertexSet::EMPTY).unwrap());
        assert!(!d_separated(&g, s(0), s(1), VertexSet::EMPTY).unwrap());
        assert!(matches!(d_separated(&g, s(0), s(1), s(1)), Err(GraphError::Overlap(_))));
    }

    #[test]
    fn collider_opens_on_descendant() {
        let g = ProcessGraph::observed_only(&["a", "b", "c", "d"], &[("a", "c"), ("b", "c"), ("c", "d")]).unwrap();
        let s = |v: usize| VertexSet::singleton(v);
        assert!(d_separated(&g, s(0), s(1), VertexSet::EMPTY).unwrap());
        assert!(!d_separated(&g, s(0), s(1), s(3)).unwrap());
        assert!(!d_separated(&g, s(0), s(1), s(2)).unwrap());
    }

    #[test]
    fn instrument_tsep() {
        let g = ProcessGraph::new(&["u", "v", "w"], &["l"], &[("u", "v"), ("v", "w"), ("l", "v"), ("l", "w")]).unwrap();
        let sep = t_separation_min(&g, VertexSet::singleton(1), VertexSet::singleton(2)).unwrap();
        assert_eq!(sep, TSeparation { size: 1, zx: VertexSet::singleton(1), zy: VertexSet::EMPTY });
        let d = ProcessGraph::observed_only(&["a", "b"], &[]).unwrap();
        let sep = t_separation_min(&d, VertexSet::singleton(0), VertexSet::singleton(1)).unwrap();
        assert_eq!(sep.size, 0);
    }
}
