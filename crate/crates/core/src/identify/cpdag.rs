use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::graph::{d_separated, GraphError, ProcessGraph, VertexSet};
use crate::svar::conditional_spectrum;
use crate::RatMatrix;

/// Partially directed graph over `labels`; pairs index into `labels`.
/// Undirected pairs are stored as `(a, b)` with `a < b`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Cpdag {
    pub labels: Vec<String>,
    pub directed: BTreeSet<(usize, usize)>,
    pub undirected: BTreeSet<(usize, usize)>,
    /// Orientation conflicts met along the way; empty for a faithful oracle.
    pub conflicts: Vec<String>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Cpdag {
    fn with_skeleton(labels: Vec<String>, adj: &[VertexSet]) -> Cpdag {
        let undirected = (0..adj.len()).flat_map(|a| adj[a].iter().filter(move |&b| a < b).map(move |b| (a, b))).collect();
        Cpdag { labels, undirected, ..Default::default() }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&key(a, b)) || self.directed.contains(&(a, b)) || self.directed.contains(&(b, a))
    }

    fn is_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&key(a, b))
    }

    fn orient(&mut self, a: usize, b: usize) -> bool {
        if self.undirected.remove(&key(a, b)) {
            self.directed.insert((a, b));
            true
        } else {
            false
        }
    }

    /// Edges as label pairs, for reports.
    pub fn edge_labels(&self) -> (Vec<(String, String)>, Vec<(String, String)>) {
        let named = |s: &BTreeSet<(usize, usize)>| {
            s.iter().map(|&(a, b)| (self.labels[a].clone(), self.labels[b].clone())).collect()
        };
        (named(&self.directed), named(&self.undirected))
    }

    /// Meek rules 1 to 3 until nothing changes.
    fn close(&mut self) {
        let n = self.labels.len();
        loop {
            let mut changed = false;
            for (a, b) in self.undirected.clone() {
                for (x, y) in [(a, b), (b, a)] {
                    if !self.is_undirected(x, y) {
                        continue;
                    }
                    // R1: w -> x - y, w and y not adjacent
                    let r1 = (0..n).any(|w| self.directed.contains(&(w, x)) && !self.adjacent(w, y));
                    // R2: x -> w -> y
                    let r2 = (0..n).any(|w| self.directed.contains(&(x, w)) && self.directed.contains(&(w, y)));
                    // R3: x - c -> y, x - d -> y, c and d not adjacent
                    let r3 = {
                        let cs: Vec<usize> = (0..n)
                            .filter(|&c| self.is_undirected(x, c) && self.directed.contains(&(c, y)))
                            .collect();
                        cs.iter().enumerate().any(|(i, &c)| cs[i + 1..].iter().any(|&d| !self.adjacent(c, d)))
                    };
                    if r1 || r2 || r3 {
                        changed |= self.orient(x, y);
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
}

/// PC discovery against a conditional independence oracle.
///
/// `ci(x, y, z)` answers whether `x` and `y` are independent given `z`, all
/// index sets into `labels`. Skeleton search is order independent: the
/// adjacency sets used at each conditioning size are frozen at the start of
/// that level.
pub fn discover_cpdag<F>(labels: &[String], mut ci: F) -> Cpdag
where
    F: FnMut(&[usize], &[usize], &[usize]) -> bool,
{
    let n = labels.len();
    assert!(n <= 64, "at most 64 variables");
    let all = VertexSet::range(n);
    let mut adj: Vec<VertexSet> = (0..n).map(|v| all.without(v)).collect();
    let mut sepset: BTreeMap<(usize, usize), VertexSet> = BTreeMap::new();
    let mut d = 0;
    while (0..n).any(|v| adj[v].len() > d) {
        let frozen = adj.clone();
        for a in 0..n {
            for b in frozen[a].iter().filter(|&b| a < b) {
                if !adj[a].contains(b) {
                    continue;
                }
                let mut cands = frozen[a].without(b).subsets_of_size(d);
                cands.extend(frozen[b].without(a).subsets_of_size(d));
                if let Some(z) = cands.into_iter().find(|z| ci(&[a], &[b], &z.to_vec())) {
                    adj[a].remove(b);
                    adj[b].remove(a);
                    sepset.insert((a, b), z);
                }
            }
        }
        d += 1;
    }
    let mut out = Cpdag::with_skeleton(labels.to_vec(), &adj);
    for c in 0..n {
        let nb = adj[c].to_vec();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if adj[a].contains(b) || sepset[&key(a, b)].contains(c) {
                    continue;
                }
                for (x, y) in [(a, c), (b, c)] {
                    if out.directed.contains(&(y, x)) {
                        out.conflicts.push(format!(
                            "{} -> {} <- {} conflicts with {} -> {}",
                            labels[a], labels[c], labels[b], labels[y], labels[x]
                        ));
                    } else {
                        out.orient(x, y);
                    }
                }
            }
        }
    }
    out.close();
    out
}

/// CPDAG of a fully observed DAG, built from its skeleton and v-structures.
pub fn cpdag_of_dag(g: &ProcessGraph) -> Result<Cpdag, GraphError> {
    g.require_acyclic()?;
    let n = g.n();
    let adj: Vec<VertexSet> = (0..n).map(|v| g.parents(v).union(g.children(v))).collect();
    let mut out = Cpdag::with_skeleton(g.labels().to_vec(), &adj);
    for c in 0..n {
        let pa = g.parents(c).to_vec();
        for (i, &a) in pa.iter().enumerate() {
            for &b in &pa[i + 1..] {
                if !adj[a].contains(b) {
                    out.orient(a, c);
                    out.orient(b, c);
                }
            }
        }
    }
    out.close();
    Ok(out)
}

/// Independence oracle from d-separation in `g`.
pub fn dsep_oracle(g: &ProcessGraph) -> impl FnMut(&[usize], &[usize], &[usize]) -> bool + '_ {
    |x, y, z| {
        let set = |s: &[usize]| s.iter().fold(VertexSet::default(), |acc, &v| acc.with(v));
        d_separated(g, set(x), set(y), set(z)).expect("disjoint sets")
    }
}

/// Independence oracle `S_{X,Y|Z} = 0` on an exact spectrum whose rows are
/// the CPDAG labels.
pub fn spectral_oracle(s: &RatMatrix) -> impl FnMut(&[usize], &[usize], &[usize]) -> bool + '_ {
    |x, y, z| {
        let l = |idx: &[usize]| idx.iter().map(|&i| s.row_labels()[i].as_str()).collect::<Vec<_>>();
        // S_ZZ is positive definite on the unit circle, so never singular.
        conditional_spectrum(s, &l(x), &l(y), &l(z)).map(|m| m.is_zero()).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(labels: &[&str], edges: &[(&str, &str)]) -> (Cpdag, Cpdag) {
        let g = ProcessGraph::observed_only(labels, edges).unwrap();
        (discover_cpdag(g.labels(), dsep_oracle(&g)), cpdag_of_dag(&g).unwrap())
    }

    #[test]
    fn chain_has_no_orientation() {
        let (c, d) = run(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        assert_eq!(c, d);
        assert!(c.directed.is_empty());
        assert_eq!(c.undirected, BTreeSet::from([(0, 1), (1, 2)]));
    }

    #[test]
    fn collider_is_oriented() {
        let (c, d) = run(&["a", "b", "c"], &[("a", "c"), ("b", "c")]);
        assert_eq!(c, d);
        assert_eq!(c.directed, BTreeSet::from([(0, 2), (1, 2)]));
        assert!(c.undirected.is_empty());
    }

    #[test]
    fn meek_rule_one_propagates() {
        let (c, d) = run(&["a", "b", "c", "d"], &[("a", "c"), ("b", "c"), ("c", "d")]);
        assert_eq!(c, d);
        assert!(c.directed.contains(&(2, 3)));
    }

    #[test]
    fn empty_graph() {
        let (c, _) = run(&["a", "b"], &[]);
        assert!(c.directed.is_empty() && c.undirected.is_empty());
    }
}
