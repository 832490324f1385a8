//! Latent-factor half-treks and the latent-factor half-trek criterion.

use std::collections::{BTreeMap, BTreeSet};

use super::paths::{path_edges, permutation_sign, search_trek_systems, simple_paths};
use super::{Edge, GraphError, ProcessGraph, Trek, TrekSystem, VertexSet, Vid};

/// Candidate triple `(Y, W, L')` for a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LfhtcTriple {
    pub y: VertexSet,
    pub w: VertexSet,
    pub lp: VertexSet,
}

impl LfhtcTriple {
    pub const EMPTY: LfhtcTriple = LfhtcTriple { y: VertexSet::EMPTY, w: VertexSet::EMPTY, lp: VertexSet::EMPTY };

    pub fn new(y: VertexSet, w: VertexSet, lp: VertexSet) -> Self {
        LfhtcTriple { y, w, lp }
    }

    pub fn from_labels<S: AsRef<str>>(g: &ProcessGraph, y: &[S], w: &[S], lp: &[S]) -> Result<Self, GraphError> {
        Ok(LfhtcTriple { y: g.set_of(y)?, w: g.set_of(w)?, lp: g.set_of(lp)? })
    }
}

/// Which condition of the criterion failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LfhtcCondition {
    /// `|Y| = |pa_O(v)| + |L'|`, `|W| = |L'|`, `W` disjoint from `pa_O(v)`.
    Sizes,
    /// `Y` and `W` disjoint, shared latent parents of `Y` and `W + v` inside `L'`.
    Confounding,
    /// No half-trek system of the required form.
    HalftrekSystem,
}

impl LfhtcCondition {
    pub fn code(self) -> &'static str {
        match self {
            LfhtcCondition::Sizes => "condition-1",
            LfhtcCondition::Confounding => "condition-2",
            LfhtcCondition::HalftrekSystem => "condition-3",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LfhtcVerdict {
    /// Failed conditions in order; empty when the triple satisfies the criterion.
    pub failed: Vec<LfhtcCondition>,
    /// A witnessing system from `Y` (sorted) to `pa_O(v)` then `W` (each sorted).
    pub system: Option<TrekSystem>,
}

impl LfhtcVerdict {
    pub fn holds(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Latent-factor half-treks from `y` to `t`: first the directed paths, then
/// the treks `y <- l -> ... -> t` by latent parent `l`.
pub fn lf_halftreks(g: &ProcessGraph, y: Vid, t: Vid) -> Vec<Trek> {
    let mut out = Vec::new();
    if !g.is_observed(y) || !g.is_observed(t) {
        return out;
    }
    for p in simple_paths(g, y, t, g.observed()) {
        out.push(Trek { top: y, left: vec![y], right: p });
    }
    for l in g.pa_l(y).iter() {
        for x1 in g.children(l).iter() {
            for p in simple_paths(g, x1, t, g.observed()) {
                let mut right = Vec::with_capacity(p.len() + 1);
                right.push(l);
                right.extend(p);
                out.push(Trek { top: l, left: vec![l, y], right });
            }
        }
    }
    out
}

/// Observed vertices other than `x` reachable from some `x` in `xs` by a
/// latent-factor half-trek whose top is not in `lp`.
pub fn htr(g: &ProcessGraph, xs: VertexSet, lp: VertexSet) -> VertexSet {
    let mut out = VertexSet::EMPTY;
    for x in xs.iter() {
        let mut starts = VertexSet::singleton(x);
        for l in g.pa_l(x).difference(lp).iter() {
            starts = starts.union(g.children(l));
        }
        let reach = g.descendants(starts).intersection(g.observed());
        out = out.union(reach.without(x));
    }
    out
}

fn check_triple(g: &ProcessGraph, v: Vid, t: &LfhtcTriple) -> Result<(), GraphError> {
    let malformed = |m: String| Err(GraphError::MalformedTriple(m));
    if v >= g.n() {
        return malformed(format!("vertex id {v} out of range"));
    }
    if !g.is_observed(v) {
        return malformed(format!("{} is not observed", g.label(v)));
    }
    let allowed = g.observed().without(v);
    if !t.y.is_subset(allowed) {
        return malformed("Y must consist of observed vertices other than v".into());
    }
    if !t.w.is_subset(allowed) {
        return malformed("W must consist of observed vertices other than v".into());
    }
    if !t.lp.is_subset(g.latent()) {
        return malformed("L' must consist of latent vertices".into());
    }
    Ok(())
}

/// Checks the three conditions and returns a witnessing system when they hold.
pub fn lfhtc_check(g: &ProcessGraph, v: Vid, t: &LfhtcTriple) -> Result<LfhtcVerdict, GraphError> {
    check_triple(g, v, t)?;
    let pa = g.pa_o(v);
    let mut failed = Vec::new();
    let sizes_ok = t.y.len() == pa.len() + t.lp.len() && t.w.len() == t.lp.len() && t.w.is_disjoint(pa);
    if !sizes_ok {
        failed.push(LfhtcCondition::Sizes);
    }
    if !confounding_ok(g, v, t) {
        failed.push(LfhtcCondition::Confounding);
    }
    let system = halftrek_system(g, v, t);
    if system.is_none() {
        failed.push(LfhtcCondition::HalftrekSystem);
    }
    Ok(LfhtcVerdict { failed, system })
}

fn confounding_ok(g: &ProcessGraph, v: Vid, t: &LfhtcTriple) -> bool {
    t.y.is_disjoint(t.w) && g.pa_l_set(t.y).intersection(g.pa_l_set(t.w.with(v))).is_subset(t.lp)
}

fn halftrek_system(g: &ProcessGraph, v: Vid, t: &LfhtcTriple) -> Option<TrekSystem> {
    let pa = g.pa_o(v);
    let targets: Vec<Vid> = pa.iter().chain(t.w.iter()).collect();
    let sources = t.y.to_vec();
    if sources.len() != targets.len() || !pa.is_disjoint(t.w) {
        return None;
    }
    let table: Vec<Vec<Vec<Trek>>> = sources
        .iter()
        .map(|&y| {
            targets
                .iter()
                .map(|&b| {
                    if t.w.contains(b) {
                        t.lp.intersection(g.pa_l(y))
                            .iter()
                            .filter(|&l| g.has_edge(l, b))
                            .map(|l| Trek { top: l, left: vec![l, y], right: vec![l, b] })
                            .collect()
                    } else {
                        lf_halftreks(g, y, b)
                    }
                })
                .collect()
        })
        .collect();
    search_trek_systems(&table, 1).into_iter().next()
}

/// Edges whose link functions must be known before the triple can be used:
/// the observed edges into `W` and into `Y ∩ htr_{L'}(W ∪ {v})`.
pub fn lfhtc_prerequisites(g: &ProcessGraph, v: Vid, t: &LfhtcTriple) -> BTreeSet<Edge> {
    let heads = t.w.union(t.y.intersection(htr(g, t.w.with(v), t.lp)));
    heads.iter().flat_map(|y| g.pa_o(y).iter().map(move |u| (u, y))).collect()
}

/// First triple satisfying the criterion whose prerequisites are all solved.
///
/// `L'` grows in size (lexicographic within a size). For each `L'`, `Y` runs
/// over subsets with the fewest non-parents first, then lexicographically;
/// `W` runs lexicographically.
pub fn lfhtc_search(g: &ProcessGraph, v: Vid, solved: &BTreeSet<Edge>) -> Result<Option<LfhtcTriple>, GraphError> {
    check_triple(g, v, &LfhtcTriple::EMPTY)?;
    let pa = g.pa_o(v);
    let others = g.observed().without(v);
    for lp in g.latent().subsets() {
        let k = pa.len() + lp.len();
        let mut ys = others.subsets_of_size(k);
        ys.sort_by_key(|y| (y.difference(pa).len(), y.to_vec()));
        for y in ys {
            for w in others.difference(pa).difference(y).subsets_of_size(lp.len()) {
                let t = LfhtcTriple { y, w, lp };
                if !confounding_ok(g, v, &t) {
                    continue;
                }
                if !lfhtc_prerequisites(g, v, &t).iter().all(|e| solved.contains(e)) {
                    continue;
                }
                if halftrek_system(g, v, &t).is_some() {
                    return Ok(Some(t));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LfhtcOrder {
    /// Vertices in the order they were resolved, with their triples.
    pub steps: Vec<(Vid, LfhtcTriple)>,
    /// Observed vertices with observed parents that no triple resolved.
    pub unresolved: Vec<Vid>,
}

impl LfhtcOrder {
    pub fn is_complete(&self) -> bool {
        self.unresolved.is_empty()
    }
}

/// Repeated passes over the observed vertices in label order, resolving any
/// vertex with an applicable triple, until a pass makes no progress.
pub fn lfhtc_order(g: &ProcessGraph) -> LfhtcOrder {
    let mut steps = Vec::new();
    let mut done = VertexSet::EMPTY;
    let mut solved = BTreeSet::new();
    for v in g.observed().iter() {
        if g.pa_o(v).is_empty() {
            steps.push((v, LfhtcTriple::EMPTY));
            done.insert(v);
        }
    }
    loop {
        let mut progress = false;
        for v in g.observed().difference(done).iter() {
            if let Some(t) = lfhtc_search(g, v, &solved).expect("v is observed") {
                steps.push((v, t));
                done.insert(v);
                solved.extend(g.pa_o(v).iter().map(|u| (u, v)));
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    LfhtcOrder { steps, unresolved: g.observed().difference(done).to_vec() }
}

fn is_lf_halftrek(g: &ProcessGraph, t: &Trek) -> bool {
    if !t.is_valid(g) {
        return false;
    }
    let right_observed = t.right[1..].iter().all(|&x| g.is_observed(x));
    match t.left.len() {
        1 => g.is_observed(t.top) && right_observed,
        2 => !g.is_observed(t.top) && t.right.len() >= 2 && right_observed,
        _ => false,
    }
}

fn excise_loops(p: &[Vid]) -> Vec<Vid> {
    let mut out: Vec<Vid> = Vec::with_capacity(p.len());
    for &x in p {
        if let Some(i) = out.iter().position(|&y| y == x) {
            out.truncate(i + 1);
        } else {
            out.push(x);
        }
    }
    out
}

fn edge_count(treks: &[Trek]) -> usize {
    treks.iter().map(|t| t.left.len() + t.right.len() - 2).sum()
}

/// Reduces a system of latent-factor half-treks without sided intersection
/// so that its edge subgraph is acyclic, each source appears exactly once on
/// its own trek, and a trek passes through another trek's source only if
/// that trek comes earlier. The treks are returned in that order; `sign` is
/// taken relative to the same source and target orders as the input's.
pub fn minimal_halftrek_subsystem(g: &ProcessGraph, t: &TrekSystem) -> Result<TrekSystem, GraphError> {
    for tr in &t.treks {
        if !is_lf_halftrek(g, tr) {
            return Err(GraphError::InvalidSystem("not a latent-factor half-trek".into()));
        }
    }
    let input_target: BTreeMap<Vid, Vid> = t.treks.iter().map(|tr| (tr.source(), tr.target())).collect();
    if input_target.len() != t.treks.len() {
        return Err(GraphError::InvalidSystem("repeated source".into()));
    }
    let mut treks: Vec<Trek> = t
        .treks
        .iter()
        .map(|tr| Trek { top: tr.top, left: tr.left.clone(), right: excise_loops(&tr.right) })
        .collect();
    check_sided(&treks)?;
    loop {
        for tr in treks.iter_mut() {
            let x = tr.source();
            if tr.left.len() == 2 {
                if let Some(i) = tr.right.iter().position(|&r| r == x) {
                    *tr = Trek { top: x, left: vec![x], right: tr.right[i..].to_vec() };
                }
            }
        }
        let n = treks.len();
        let sources: Vec<Vid> = treks.iter().map(Trek::source).collect();
        // before[i] = indices j that must precede i
        let before: Vec<Vec<usize>> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && treks[i].right.contains(&sources[j])).collect())
            .collect();
        match find_cycle(&before) {
            None => {
                let order = topo(&before);
                let treks: Vec<Trek> = order.into_iter().map(|i| treks[i].clone()).collect();
                let sign = t.sign * target_change_sign(&input_target, &treks);
                return Ok(TrekSystem { treks, sign });
            }
            Some(cycle) => {
                // cycle[k] precedes cycle[k+1]: source of cycle[k] lies on trek cycle[k+1]
                let m = cycle.len();
                let before_edges = edge_count(&treks);
                let rewired: Vec<Trek> = (0..m)
                    .map(|k| {
                        let a = cycle[k];
                        let next = &treks[cycle[(k + 1) % m]];
                        let x = sources[a];
                        let i = next.right.iter().position(|&r| r == x).expect("on the right side");
                        Trek { top: x, left: vec![x], right: next.right[i..].to_vec() }
                    })
                    .collect();
                for (k, tr) in rewired.into_iter().enumerate() {
                    treks[cycle[k]] = tr;
                }
                debug_assert!(edge_count(&treks) < before_edges);
            }
        }
    }
}

fn check_sided(treks: &[Trek]) -> Result<(), GraphError> {
    let mut l = VertexSet::EMPTY;
    let mut r = VertexSet::EMPTY;
    for t in treks {
        let (tl, tr) = (t.left_set(), t.right_set());
        if !tl.is_disjoint(l) || !tr.is_disjoint(r) {
            return Err(GraphError::InvalidSystem("sided intersection".into()));
        }
        l = l.union(tl);
        r = r.union(tr);
    }
    Ok(())
}

fn target_change_sign(input_target: &BTreeMap<Vid, Vid>, treks: &[Trek]) -> i8 {
    let targets: Vec<Vid> = input_target.values().copied().collect();
    let pos = |y: Vid| targets.iter().position(|&t| t == y).expect("same target set");
    let perm: Vec<usize> = input_target
        .keys()
        .map(|&x| {
            let new_t = treks.iter().find(|t| t.source() == x).expect("same sources").target();
            pos(new_t)
        })
        .collect();
    // perm maps old target position (via source) to new target position
    let old: Vec<usize> = input_target.values().map(|&y| pos(y)).collect();
    let mut rho = vec![0; perm.len()];
    for (i, &o) in old.iter().enumerate() {
        rho[o] = perm[i];
    }
    permutation_sign(&rho)
}

fn find_cycle(before: &[Vec<usize>]) -> Option<Vec<usize>> {
    // colors: 0 white, 1 on stack, 2 done
    let n = before.len();
    let mut color = vec![0u8; n];
    let mut stack: Vec<usize> = Vec::new();
    fn dfs(i: usize, before: &[Vec<usize>], color: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
        color[i] = 1;
        stack.push(i);
        for &j in &before[i] {
            if color[j] == 1 {
                let at = stack.iter().position(|&s| s == j).expect("on stack");
                // stack[at..] follows "must come after" links; reverse to get precedence order
                let mut cyc: Vec<usize> = stack[at..].to_vec();
                cyc.reverse();
                return Some(cyc);
            }
            if color[j] == 0 {
                if let Some(c) = dfs(j, before, color, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        color[i] = 2;
        None
    }
    for i in 0..n {
        if color[i] == 0 {
            if let Some(c) = dfs(i, before, &mut color, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

fn topo(before: &[Vec<usize>]) -> Vec<usize> {
    let n = before.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let i = (0..n)
            .find(|&i| !placed[i] && before[i].iter().all(|&j| placed[j]))
            .expect("precedence is acyclic");
        placed[i] = true;
        order.push(i);
    }
    order
}

/// Edges used by a trek system.
pub fn system_edges(treks: &[Trek]) -> BTreeSet<Edge> {
    treks.iter().flat_map(|t| path_edges(&t.left).chain(path_edges(&t.right)).collect::<Vec<_>>()).collect()
}
