//! Directed paths, treks, and systems of them.

use super::{Edge, GraphError, ProcessGraph, VertexSet, Vid};

/// A directed path as its vertex sequence; a single vertex is the empty path.
pub type Path = Vec<Vid>;

/// A trek: two directed paths leaving a common top vertex.
///
/// `left` runs from `top` to the source, `right` from `top` to the target.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Trek {
    pub top: Vid,
    pub left: Path,
    pub right: Path,
}

impl Trek {
    pub fn trivial(v: Vid) -> Self {
        Trek { top: v, left: vec![v], right: vec![v] }
    }

    pub fn source(&self) -> Vid {
        *self.left.last().expect("paths are nonempty")
    }

    pub fn target(&self) -> Vid {
        *self.right.last().expect("paths are nonempty")
    }

    pub fn left_set(&self) -> VertexSet {
        self.left.iter().copied().collect()
    }

    pub fn right_set(&self) -> VertexSet {
        self.right.iter().copied().collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        path_edges(&self.left).chain(path_edges(&self.right))
    }

    pub fn is_valid(&self, g: &ProcessGraph) -> bool {
        self.left.first() == Some(&self.top)
            && self.right.first() == Some(&self.top)
            && path_edges(&self.left).chain(path_edges(&self.right)).all(|(u, v)| g.has_edge(u, v))
    }
}

pub(crate) fn path_edges(p: &[Vid]) -> impl Iterator<Item = Edge> + '_ {
    p.windows(2).map(|w| (w[0], w[1]))
}

/// Paths `paths[i]` start at `X[i]`; `sign` is the sign of the induced bijection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSystem {
    pub paths: Vec<Path>,
    pub sign: i8,
}

/// Trek `treks[i]` has source `X[i]`; `sign` is the sign of the induced bijection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrekSystem {
    pub treks: Vec<Trek>,
    pub sign: i8,
}

/// Sign of a permutation given as `perm[i] = image of i`.
pub fn permutation_sign(perm: &[usize]) -> i8 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1i8;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// Sign of the bijection `X -> Y` realised by treks listed in any order.
pub fn system_sign(treks: &[Trek], x: &[Vid], y: &[Vid]) -> Result<i8, GraphError> {
    if treks.len() != x.len() || x.len() != y.len() {
        return Err(GraphError::SizeMismatch("system, sources and targets differ in size".into()));
    }
    let mut perm = vec![usize::MAX; x.len()];
    for t in treks {
        let i = x.iter().position(|&v| v == t.source());
        let j = y.iter().position(|&v| v == t.target());
        match (i, j) {
            (Some(i), Some(j)) if perm[i] == usize::MAX => perm[i] = j,
            _ => return Err(GraphError::InvalidSystem("treks do not induce a bijection".into())),
        }
    }
    let mut hit = vec![false; y.len()];
    for &j in &perm {
        if hit[j] {
            return Err(GraphError::InvalidSystem("two treks share a target".into()));
        }
        hit[j] = true;
    }
    Ok(permutation_sign(&perm))
}

/// Simple directed paths from `x` to `y` whose vertices all lie in `allowed`.
pub(crate) fn simple_paths(g: &ProcessGraph, x: Vid, y: Vid, allowed: VertexSet) -> Vec<Path> {
    let mut out = Vec::new();
    if !allowed.contains(x) || !allowed.contains(y) {
        return out;
    }
    let reach_y = g.ancestors(VertexSet::singleton(y));
    let mut stack = vec![x];
    dfs(g, y, allowed.intersection(reach_y), &mut stack, VertexSet::singleton(x), &mut out);
    out
}

fn dfs(g: &ProcessGraph, y: Vid, allowed: VertexSet, stack: &mut Vec<Vid>, on: VertexSet, out: &mut Vec<Path>) {
    let v = *stack.last().expect("nonempty");
    if v == y {
        out.push(stack.clone());
        return;
    }
    for c in g.children(v).intersection(allowed).difference(on).iter() {
        stack.push(c);
        dfs(g, y, allowed, stack, on.with(c), out);
        stack.pop();
    }
}

/// All directed paths from `x` to `y`, including the empty path when `x == y`.
pub fn enumerate_paths(g: &ProcessGraph, x: Vid, y: Vid) -> Result<Vec<Path>, GraphError> {
    g.require_acyclic()?;
    Ok(simple_paths(g, x, y, g.all()))
}

/// All treks from `v` to `w`, ordered by top vertex.
pub fn enumerate_treks(g: &ProcessGraph, v: Vid, w: Vid) -> Result<Vec<Trek>, GraphError> {
    g.require_acyclic()?;
    Ok(treks_between(g, v, w))
}

pub(crate) fn treks_between(g: &ProcessGraph, v: Vid, w: Vid) -> Vec<Trek> {
    let tops = g.ancestors(VertexSet::singleton(v)).intersection(g.ancestors(VertexSet::singleton(w)));
    let mut out = Vec::new();
    for top in tops.iter() {
        let lefts = simple_paths(g, top, v, g.all());
        let rights = simple_paths(g, top, w, g.all());
        for l in &lefts {
            for r in &rights {
                out.push(Trek { top, left: l.clone(), right: r.clone() });
            }
        }
    }
    out
}

fn check_system_args(x: &[Vid], y: &[Vid]) -> Result<(), GraphError> {
    if x.len() != y.len() {
        return Err(GraphError::SizeMismatch(format!("|X| = {} but |Y| = {}", x.len(), y.len())));
    }
    let sx: VertexSet = x.iter().copied().collect();
    let sy: VertexSet = y.iter().copied().collect();
    if sx.len() != x.len() || sy.len() != y.len() {
        return Err(GraphError::SizeMismatch("repeated vertex in X or Y".into()));
    }
    Ok(())
}

/// All systems of pairwise vertex-disjoint directed paths from `X` to `Y`.
pub fn nonintersecting_path_systems(g: &ProcessGraph, x: &[Vid], y: &[Vid]) -> Result<Vec<PathSystem>, GraphError> {
    g.require_acyclic()?;
    check_system_args(x, y)?;
    let k = x.len();
    let table: Vec<Vec<Vec<(Path, VertexSet)>>> = x
        .iter()
        .map(|&a| {
            y.iter()
                .map(|&b| {
                    simple_paths(g, a, b, g.all())
                        .into_iter()
                        .map(|p| {
                            let s = p.iter().copied().collect();
                            (p, s)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut chosen: Vec<(usize, usize)> = Vec::with_capacity(k);
    fn rec(
        i: usize,
        table: &[Vec<Vec<(Path, VertexSet)>>],
        used_t: &mut Vec<bool>,
        used_v: VertexSet,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<PathSystem>,
    ) {
        let k = table.len();
        if i == k {
            let perm: Vec<usize> = chosen.iter().map(|&(j, _)| j).collect();
            let paths = chosen.iter().enumerate().map(|(r, &(j, p))| table[r][j][p].0.clone()).collect();
            out.push(PathSystem { paths, sign: permutation_sign(&perm) });
            return;
        }
        for j in 0..k {
            if used_t[j] {
                continue;
            }
            for (p, (_, s)) in table[i][j].iter().enumerate() {
                if !s.is_disjoint(used_v) {
                    continue;
                }
                used_t[j] = true;
                chosen.push((j, p));
                rec(i + 1, table, used_t, used_v.union(*s), chosen, out);
                chosen.pop();
                used_t[j] = false;
            }
        }
    }
    rec(0, &table, &mut vec![false; k], VertexSet::EMPTY, &mut chosen, &mut out);
    Ok(out)
}

/// All trek systems from `X` to `Y` whose left sides are pairwise disjoint and
/// whose right sides are pairwise disjoint.
pub fn sided_nonintersecting_trek_systems(
    g: &ProcessGraph,
    x: &[Vid],
    y: &[Vid],
) -> Result<Vec<TrekSystem>, GraphError> {
    g.require_acyclic()?;
    check_system_args(x, y)?;
    let table: Vec<Vec<Vec<Trek>>> = x.iter().map(|&a| y.iter().map(|&b| treks_between(g, a, b)).collect()).collect();
    Ok(search_trek_systems(&table, usize::MAX))
}

/// Backtracking over `table[i][j]` = candidate treks from the i-th source to
/// the j-th target. Stops after `limit` systems.
pub(crate) fn search_trek_systems(table: &[Vec<Vec<Trek>>], limit: usize) -> Vec<TrekSystem> {
    let k = table.len();
    let sets: Vec<Vec<Vec<(VertexSet, VertexSet)>>> = table
        .iter()
        .map(|row| row.iter().map(|c| c.iter().map(|t| (t.left_set(), t.right_set())).collect()).collect())
        .collect();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(k);
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        table: &[Vec<Vec<Trek>>],
        sets: &[Vec<Vec<(VertexSet, VertexSet)>>],
        used_t: &mut Vec<bool>,
        ul: VertexSet,
        ur: VertexSet,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<TrekSystem>,
        limit: usize,
    ) {
        if out.len() >= limit {
            return;
        }
        let k = table.len();
        if i == k {
            let perm: Vec<usize> = chosen.iter().map(|&(j, _)| j).collect();
            let treks = chosen.iter().enumerate().map(|(r, &(j, p))| table[r][j][p].clone()).collect();
            out.push(TrekSystem { treks, sign: permutation_sign(&perm) });
            return;
        }
        for j in 0..k {
            if used_t[j] {
                continue;
            }
            for (p, &(l, r)) in sets[i][j].iter().enumerate() {
                if !l.is_disjoint(ul) || !r.is_disjoint(ur) {
                    continue;
                }
                used_t[j] = true;
                chosen.push((j, p));
                rec(i + 1, table, sets, used_t, ul.union(l), ur.union(r), chosen, out, limit);
                chosen.pop();
                used_t[j] = false;
            }
        }
    }
    rec(0, table, &sets, &mut vec![false; k], VertexSet::EMPTY, VertexSet::EMPTY, &mut chosen, &mut out, limit);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instrument() -> ProcessGraph {
        ProcessGraph::new(&["u", "v", "w"], &["l"], &[("u", "v"), ("v", "w"), ("l", "v"), ("l", "w")]).unwrap()
    }

    #[test]
    fn instrument_paths_and_treks() {
        let g = instrument();
        let (u, v, w, l) = (0, 1, 2, 3);
        assert_eq!(enumerate_paths(&g, u, w).unwrap(), vec![vec![u, v, w]]);
        assert_eq!(enumerate_paths(&g, v, v).unwrap(), vec![vec![v]]);
        let treks = enumerate_treks(&g, v, w).unwrap();
        // besides the two treks through the single edges, u and l also reach w through v
        assert_eq!(treks.len(), 4);
        assert!(treks.contains(&Trek { top: v, left: vec![v], right: vec![v, w] }));
        assert!(treks.contains(&Trek { top: l, left: vec![l, v], right: vec![l, w] }));
        assert!(treks.contains(&Trek { top: u, left: vec![u, v], right: vec![u, v, w] }));
        assert!(treks.contains(&Trek { top: l, left: vec![l, v], right: vec![l, v, w] }));
    }

    #[test]
    fn trivial_trek_at_vertex() {
        let g = instrument();
        assert!(enumerate_treks(&g, 1, 1).unwrap().contains(&Trek::trivial(1)));
    }

    #[test]
    fn signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1);
    }

    #[test]
    fn forced_intersection_has_no_system() {
        let g = ProcessGraph::observed_only(&["a", "b", "m", "c", "d"], &[("a", "m"), ("b", "m"), ("m", "c"), ("m", "d")])
            .unwrap();
        let id = |s| g.id(s).unwrap();
        let sys = nonintersecting_path_systems(&g, &[id("a"), id("b")], &[id("c"), id("d")]).unwrap();
        assert!(sys.is_empty());
        let iso = ProcessGraph::observed_only(&["a", "b"], &[]).unwrap();
        let sys = nonintersecting_path_systems(&iso, &[0, 1], &[0, 1]).unwrap();
        assert_eq!(sys, vec![PathSystem { paths: vec![vec![0], vec![1]], sign: 1 }]);
    }

    #[test]
    fn cyclic_graph_is_rejected() {
        let c = ProcessGraph::observed_only(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        assert_eq!(enumerate_paths(&c, 0, 1), Err(GraphError::Cyclic));
        assert_eq!(enumerate_treks(&c, 0, 1), Err(GraphError::Cyclic));
    }
}
