//! Process graphs and time series graphs with an observed/latent partition.
//!
//! Vertices are addressed by dense ids. Observed vertices come first, sorted
//! by label, followed by the latent vertices, also sorted by label. All
//! enumeration is in id order, which makes every result reproducible.

pub mod generate;
mod lfhtc;
mod paths;
mod separation;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lfhtc::{
    htr, lf_halftreks, lfhtc_check, lfhtc_order, lfhtc_prerequisites, lfhtc_search, minimal_halftrek_subsystem, system_edges,
    LfhtcCondition, LfhtcOrder, LfhtcTriple, LfhtcVerdict,
};
pub use paths::{
    enumerate_paths, enumerate_treks, nonintersecting_path_systems, permutation_sign, sided_nonintersecting_trek_systems,
    system_sign, Path, PathSystem, Trek, TrekSystem,
};
pub use separation::{d_separated, t_separation_min, trek_sides, TSeparation};

pub type Vid = usize;
pub type Edge = (Vid, Vid);

/// Maximum number of vertices representable in a [`VertexSet`].
pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("duplicate vertex label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown vertex label {0:?}")]
    UnknownLabel(String),
    #[error("self-loop on {0:?}; auto-dependence belongs in the auto lag sets")]
    SelfLoop(String),
    #[error("edge {from:?} -> {to:?} points into a latent vertex; latent vertices must have no incoming edges")]
    EdgeIntoLatent { from: String, to: String },
    #[error("duplicate edge {from:?} -> {to:?}")]
    DuplicateEdge { from: String, to: String },
    #[error("at most {MAX_VERTICES} vertices are supported, got {0}")]
    TooManyVertices(usize),
    #[error("the process graph has a directed cycle")]
    Cyclic,
    #[error("edge {from:?} -> {to:?} has negative lag {lag}")]
    NegativeLag { from: String, to: String, lag: i64 },
    #[error("edge {from:?} -> {to:?} has an empty lag set")]
    EmptyLagSet { from: String, to: String },
    #[error("auto lag {lag} of {vertex:?} must be at least 1")]
    NonPositiveAutoLag { vertex: String, lag: i64 },
    #[error("lag {0} is too large")]
    LagTooLarge(i64),
    #[error("vertex sets overlap: {0}")]
    Overlap(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("malformed triple: {0}")]
    MalformedTriple(String),
    #[error("invalid trek system: {0}")]
    InvalidSystem(String),
}

/// A set of vertex ids stored as a 64-bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct VertexSet(u64);

impl VertexSet {
    pub const EMPTY: VertexSet = VertexSet(0);

    pub fn from_bits(bits: u64) -> Self {
        VertexSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(v: Vid) -> Self {
        VertexSet(1 << v)
    }

    /// `{0, 1, ..., n-1}`.
    pub fn range(n: usize) -> Self {
        if n >= 64 {
            VertexSet(u64::MAX)
        } else {
            VertexSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, v: Vid) -> bool {
        v < 64 && self.0 >> v & 1 == 1
    }

    pub fn insert(&mut self, v: Vid) {
        self.0 |= 1 << v;
    }

    pub fn remove(&mut self, v: Vid) {
        self.0 &= !(1 << v);
    }

    pub fn with(self, v: Vid) -> Self {
        VertexSet(self.0 | 1 << v)
    }

    pub fn without(self, v: Vid) -> Self {
        VertexSet(self.0 & !(1 << v))
    }

    pub fn union(self, o: VertexSet) -> Self {
        VertexSet(self.0 | o.0)
    }

    pub fn intersection(self, o: VertexSet) -> Self {
        VertexSet(self.0 & o.0)
    }

    pub fn difference(self, o: VertexSet) -> Self {
        VertexSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: VertexSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: VertexSet) -> bool {
        self.0 & o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn first(self) -> Option<Vid> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = Vid> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(v)
        })
    }

    pub fn to_vec(self) -> Vec<Vid> {
        self.iter().collect()
    }

    /// All subsets of `self` with exactly `k` elements, in lexicographic
    /// order of their sorted member lists.
    pub fn subsets_of_size(self, k: usize) -> Vec<VertexSet> {
        let items = self.to_vec();
        let n = items.len();
        let mut out = Vec::new();
        if k > n {
            return out;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().map(|&i| items[i]).collect());
            let mut i = k;
            while i > 0 && idx[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                return out;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    /// All subsets, ordered by size and then lexicographically.
    pub fn subsets(self) -> Vec<VertexSet> {
        (0..=self.len()).flat_map(|k| self.subsets_of_size(k)).collect()
    }
}

impl FromIterator<Vid> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vid>>(iter: I) -> Self {
        let mut s = VertexSet::EMPTY;
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A finite directed graph over observed and latent vertices without self-loops.
#[derive(Clone, PartialEq, Eq)]
pub struct ProcessGraph {
    labels: Vec<String>,
    n_obs: usize,
    parents: Vec<VertexSet>,
    children: Vec<VertexSet>,
    edges: Vec<Edge>,
    acyclic: bool,
}

impl ProcessGraph {
    pub fn new<S: AsRef<str>>(observed: &[S], latent: &[S], edges: &[(S, S)]) -> Result<Self, GraphError> {
        let mut obs: Vec<String> = observed.iter().map(|s| s.as_ref().to_string()).collect();
        let mut lat: Vec<String> = latent.iter().map(|s| s.as_ref().to_string()).collect();
        obs.sort();
        lat.sort();
        let n_obs = obs.len();
        let labels: Vec<String> = obs.into_iter().chain(lat).collect();
        if labels.len() > MAX_VERTICES {
            return Err(GraphError::TooManyVertices(labels.len()));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(GraphError::DuplicateLabel(l.clone()));
            }
        }
        let n = labels.len();
        let id = |s: &str| labels.iter().position(|l| l == s).ok_or_else(|| GraphError::UnknownLabel(s.to_string()));
        let mut parents = vec![VertexSet::EMPTY; n];
        let mut children = vec![VertexSet::EMPTY; n];
        let mut edge_list = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let (a, b) = (a.as_ref(), b.as_ref());
            let (u, v) = (id(a)?, id(b)?);
            if u == v {
                return Err(GraphError::SelfLoop(a.to_string()));
            }
            if v >= n_obs {
                return Err(GraphError::EdgeIntoLatent { from: a.to_string(), to: b.to_string() });
            }
            if parents[v].contains(u) {
                return Err(GraphError::DuplicateEdge { from: a.to_string(), to: b.to_string() });
            }
            parents[v].insert(u);
            children[u].insert(v);
            edge_list.push((u, v));
        }
        edge_list.sort();
        let mut g = ProcessGraph { labels, n_obs, parents, children, edges: edge_list, acyclic: false };
        g.acyclic = g.compute_topo_order().is_some();
        Ok(g)
    }

    /// Graph with observed vertices only.
    pub fn observed_only<S: AsRef<str>>(labels: &[S], edges: &[(S, S)]) -> Result<Self, GraphError> {
        ProcessGraph::new(labels, &[], edges)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n_observed(&self) -> usize {
        self.n_obs
    }

    pub fn observed(&self) -> VertexSet {
        VertexSet::range(self.n_obs)
    }

    pub fn latent(&self) -> VertexSet {
        VertexSet::range(self.n()).difference(self.observed())
    }

    pub fn all(&self) -> VertexSet {
        VertexSet::range(self.n())
    }

    pub fn is_observed(&self, v: Vid) -> bool {
        v < self.n_obs
    }

    pub fn label(&self, v: Vid) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn observed_labels(&self) -> &[String] {
        &self.labels[..self.n_obs]
    }

    pub fn id(&self, label: &str) -> Result<Vid, GraphError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| GraphError::UnknownLabel(label.to_string()))
    }

    pub fn ids<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<Vid>, GraphError> {
        labels.iter().map(|l| self.id(l.as_ref())).collect()
    }

    pub fn set_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<VertexSet, GraphError> {
        Ok(self.ids(labels)?.into_iter().collect())
    }

    pub fn labels_of(&self, s: VertexSet) -> Vec<String> {
        s.iter().map(|v| self.labels[v].clone()).collect()
    }

    pub fn parents(&self, v: Vid) -> VertexSet {
        self.parents[v]
    }

    pub fn children(&self, v: Vid) -> VertexSet {
        self.children[v]
    }

    pub fn pa_o(&self, v: Vid) -> VertexSet {
        self.parents[v].intersection(self.observed())
    }

    pub fn pa_l(&self, v: Vid) -> VertexSet {
        self.parents[v].intersection(self.latent())
    }

    /// Union of latent parents over a set.
    pub fn pa_l_set(&self, s: VertexSet) -> VertexSet {
        s.iter().fold(VertexSet::EMPTY, |acc, v| acc.union(self.pa_l(v)))
    }

    pub fn has_edge(&self, u: Vid, v: Vid) -> bool {
        self.parents[v].contains(u)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges between observed vertices.
    pub fn observed_edges(&self) -> Vec<Edge> {
        self.edges.iter().copied().filter(|&(u, _)| self.is_observed(u)).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        self.acyclic
    }

    /// Whether the subgraph induced on the observed vertices has a cycle.
    pub fn observed_cyclic(&self) -> bool {
        // latent vertices have no parents, so any cycle lies inside O
        !self.acyclic
    }

    pub fn require_acyclic(&self) -> Result<(), GraphError> {
        if self.acyclic {
            Ok(())
        } else {
            Err(GraphError::Cyclic)
        }
    }

    fn compute_topo_order(&self) -> Option<Vec<Vid>> {
        let n = self.n();
        let mut indeg: Vec<usize> = self.parents.iter().map(|p| p.len()).collect();
        let mut ready: BTreeSet<Vid> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for c in self.children[v].iter() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Topological order, smallest id first among ready vertices.
    pub fn topo_order(&self) -> Result<Vec<Vid>, GraphError> {
        self.compute_topo_order().ok_or(GraphError::Cyclic)
    }

    /// Ancestors of `s`, including `s` itself.
    pub fn ancestors(&self, s: VertexSet) -> VertexSet {
        self.closure(s, &self.parents)
    }

    /// Descendants of `s`, including `s` itself.
    pub fn descendants(&self, s: VertexSet) -> VertexSet {
        self.closure(s, &self.children)
    }

    fn closure(&self, s: VertexSet, next: &[VertexSet]) -> VertexSet {
        let mut seen = s;
        let mut stack = s.to_vec();
        while let Some(v) = stack.pop() {
            for u in next[v].difference(seen).iter() {
                seen.insert(u);
                stack.push(u);
            }
        }
        seen
    }

    /// Subgraph on the same vertices keeping only the given edges.
    pub fn edge_subgraph(&self, keep: &BTreeSet<Edge>) -> ProcessGraph {
        let n = self.n();
        let mut parents = vec![VertexSet::EMPTY; n];
        let mut children = vec![VertexSet::EMPTY; n];
        let mut edges = Vec::new();
        for &(u, v) in &self.edges {
            if keep.contains(&(u, v)) {
                parents[v].insert(u);
                children[u].insert(v);
                edges.push((u, v));
            }
        }
        let mut g = ProcessGraph {
            labels: self.labels.clone(),
            n_obs: self.n_obs,
            parents,
            children,
            edges,
            acyclic: false,
        };
        g.acyclic = g.compute_topo_order().is_some();
        g
    }

    /// The same graph with every vertex marked observed (ids are unchanged).
    pub fn all_observed(&self) -> ProcessGraph {
        ProcessGraph { n_obs: self.n(), ..self.clone() }
    }
}

impl fmt::Debug for ProcessGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> =
            self.edges.iter().map(|&(u, v)| format!("{}->{}", self.labels[u], self.labels[v])).collect();
        f.debug_struct("ProcessGraph")
            .field("observed", &self.observed_labels())
            .field("latent", &&self.labels[self.n_obs..])
            .field("edges", &edges)
            .finish()
    }
}

/// A process graph annotated with lag sets.
///
/// Every edge carries a nonempty set of lags `k >= 0`; every vertex carries a
/// (possibly empty) set of auto lags `k >= 1`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TimeSeriesGraph {
    base: ProcessGraph,
    cross_lags: BTreeMap<Edge, Vec<u32>>,
    auto_lags: Vec<Vec<u32>>,
    order: u32,
}

const MAX_LAG: i64 = 1 << 16;

impl TimeSeriesGraph {
    pub fn new(
        base: ProcessGraph,
        cross_lags: BTreeMap<Edge, Vec<u32>>,
        auto_lags: Vec<Vec<u32>>,
    ) -> Result<Self, GraphError> {
        let n = base.n();
        if auto_lags.len() != n {
            return Err(GraphError::SizeMismatch(format!("auto lag sets for {} of {n} vertices", auto_lags.len())));
        }
        let keys: Vec<Edge> = cross_lags.keys().copied().collect();
        if keys != base.edges {
            return Err(GraphError::SizeMismatch("lag sets must be keyed exactly by the edges".into()));
        }
        let mut cross = BTreeMap::new();
        for (&(u, v), lags) in &cross_lags {
            let set: BTreeSet<u32> = lags.iter().copied().collect();
            if set.is_empty() {
                return Err(GraphError::EmptyLagSet { from: base.label(u).into(), to: base.label(v).into() });
            }
            cross.insert((u, v), set.into_iter().collect::<Vec<_>>());
        }
        let mut auto = Vec::with_capacity(n);
        for (v, lags) in auto_lags.iter().enumerate() {
            let set: BTreeSet<u32> = lags.iter().copied().collect();
            if set.contains(&0) {
                return Err(GraphError::NonPositiveAutoLag { vertex: base.label(v).into(), lag: 0 });
            }
            auto.push(set.into_iter().collect::<Vec<_>>());
        }
        let order = cross
            .values()
            .chain(auto.iter())
            .filter_map(|l: &Vec<u32>| l.last().copied())
            .max()
            .unwrap_or(0);
        Ok(TimeSeriesGraph { base, cross_lags: cross, auto_lags: auto, order })
    }

    /// Every edge gets `edge_lags`, every vertex gets `auto_lags`.
    pub fn uniform(base: ProcessGraph, edge_lags: &[u32], auto_lags: &[u32]) -> Result<Self, GraphError> {
        let cross = base.edges().iter().map(|&e| (e, edge_lags.to_vec())).collect();
        let auto = vec![auto_lags.to_vec(); base.n()];
        TimeSeriesGraph::new(base, cross, auto)
    }

    pub fn graph(&self) -> &ProcessGraph {
        &self.base
    }

    pub fn cross_lags(&self) -> &BTreeMap<Edge, Vec<u32>> {
        &self.cross_lags
    }

    pub fn lags(&self, u: Vid, v: Vid) -> Option<&[u32]> {
        self.cross_lags.get(&(u, v)).map(Vec::as_slice)
    }

    pub fn auto_lags(&self, v: Vid) -> &[u32] {
        &self.auto_lags[v]
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Same lag structure restricted to a subset of the edges.
    pub fn edge_subgraph(&self, keep: &BTreeSet<Edge>) -> TimeSeriesGraph {
        let base = self.base.edge_subgraph(keep);
        let cross = self.cross_lags.iter().filter(|(e, _)| keep.contains(e)).map(|(e, l)| (*e, l.clone())).collect();
        TimeSeriesGraph { base, cross_lags: cross, auto_lags: self.auto_lags.clone(), order: self.order }
    }

    /// Same lag structure with every vertex treated as observed.
    pub fn all_observed(&self) -> TimeSeriesGraph {
        TimeSeriesGraph { base: self.base.all_observed(), ..self.clone() }
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self, GraphError> {
        let edges: Vec<(&str, &str)> = spec.edges.iter().map(|e| (e.from.as_str(), e.to.as_str())).collect();
        let obs: Vec<&str> = spec.observed.iter().map(String::as_str).collect();
        let lat: Vec<&str> = spec.latent.iter().map(String::as_str).collect();
        let base = ProcessGraph::new(&obs, &lat, &edges)?;
        let mut cross = BTreeMap::new();
        for e in &spec.edges {
            if e.lags.is_empty() {
                return Err(GraphError::EmptyLagSet { from: e.from.clone(), to: e.to.clone() });
            }
            let mut lags = Vec::with_capacity(e.lags.len());
            for &k in &e.lags {
                if k < 0 {
                    return Err(GraphError::NegativeLag { from: e.from.clone(), to: e.to.clone(), lag: k });
                }
                if k > MAX_LAG {
                    return Err(GraphError::LagTooLarge(k));
                }
                lags.push(k as u32);
            }
            cross.insert((base.id(&e.from)?, base.id(&e.to)?), lags);
        }
        let mut auto = vec![Vec::new(); base.n()];
        for (label, lags) in &spec.auto {
            let v = base.id(label)?;
            for &k in lags {
                if k < 1 {
                    return Err(GraphError::NonPositiveAutoLag { vertex: label.clone(), lag: k });
                }
                if k > MAX_LAG {
                    return Err(GraphError::LagTooLarge(k));
                }
                auto[v].push(k as u32);
            }
        }
        TimeSeriesGraph::new(base, cross, auto)
    }

    pub fn to_spec(&self) -> GraphSpec {
        let g = &self.base;
        GraphSpec {
            observed: g.observed_labels().to_vec(),
            latent: g.labels()[g.n_observed()..].to_vec(),
            edges: self
                .cross_lags
                .iter()
                .map(|(&(u, v), lags)| EdgeSpec {
                    from: g.label(u).into(),
                    to: g.label(v).into(),
                    lags: lags.iter().map(|&k| k as i64).collect(),
                })
                .collect(),
            auto: (0..g.n())
                .filter(|&v| !self.auto_lags[v].is_empty())
                .map(|v| (g.label(v).to_string(), self.auto_lags[v].iter().map(|&k| k as i64).collect()))
                .collect(),
        }
    }
}

/// On-disk graph description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub observed: Vec<String>,
    #[serde(default)]
    pub latent: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub auto: BTreeMap<String, Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    pub lags: Vec<i64>,
}
