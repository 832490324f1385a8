//! Graph families for randomized and exhaustive checks.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{ProcessGraph, TimeSeriesGraph};

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn build(obs: &[String], lat: &[String], edges: &[(usize, usize)], names: &[String]) -> ProcessGraph {
    let e: Vec<(&str, &str)> = edges.iter().map(|&(a, b)| (names[a].as_str(), names[b].as_str())).collect();
    let obs: Vec<&str> = obs.iter().map(String::as_str).collect();
    let lat: Vec<&str> = lat.iter().map(String::as_str).collect();
    ProcessGraph::new(&obs, &lat, &e).expect("generated graphs are valid")
}

/// One representative of every isomorphism class of DAGs on `n` unlabeled
/// vertices (`n <= 6`), all vertices observed and labelled `x0, x1, ...`.
pub fn all_dag_shapes(n: usize) -> Vec<ProcessGraph> {
    assert!(n <= 6, "exhaustive enumeration is limited to 6 vertices");
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let perms = permutations(n);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let names = labels("x", n);
    for mask in 0u32..1 << pairs.len() {
        let edges: Vec<(usize, usize)> =
            pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e).collect();
        let canon = perms
            .iter()
            .map(|p| {
                let mut m: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (p[a], p[b])).collect();
                m.sort();
                m
            })
            .min()
            .expect("at least one permutation");
        if seen.insert(canon) {
            out.push(build(&names, &[], &edges, &names));
        }
    }
    out
}

/// Random DAG on `n_obs` observed vertices with edge probability `p`
/// (under a random vertex order), plus `n_lat` latent vertices that each
/// point to a random set of at least two observed vertices when possible.
pub fn random_process_graph<R: Rng>(rng: &mut R, n_obs: usize, n_lat: usize, p: f64) -> ProcessGraph {
    let obs = labels("x", n_obs);
    let lat = labels("l", n_lat);
    let names: Vec<String> = obs.iter().chain(&lat).cloned().collect();
    let mut order: Vec<usize> = (0..n_obs).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n_obs {
        for j in i + 1..n_obs {
            if rng.random_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    for l in 0..n_lat {
        let mut kids: Vec<usize> = (0..n_obs).filter(|_| rng.random_bool(0.5)).collect();
        while kids.len() < 2.min(n_obs) {
            let c = rng.random_range(0..n_obs);
            if !kids.contains(&c) {
                kids.push(c);
            }
        }
        edges.extend(kids.into_iter().map(|c| (n_obs + l, c)));
    }
    build(&obs, &lat, &edges, &names)
}

/// Random lag sets: each edge gets a nonempty subset of `0..=max_lag`, each
/// vertex a (possibly empty) subset of `1..=max_lag`.
pub fn random_time_series_graph<R: Rng>(rng: &mut R, g: ProcessGraph, max_lag: u32) -> TimeSeriesGraph {
    let mut cross = BTreeMap::new();
    for &e in g.edges() {
        let mut lags: Vec<u32> = (0..=max_lag).filter(|_| rng.random_bool(0.5)).collect();
        if lags.is_empty() {
            lags.push(rng.random_range(0..=max_lag));
        }
        cross.insert(e, lags);
    }
    let auto = (0..g.n()).map(|_| (1..=max_lag).filter(|_| rng.random_bool(0.5)).collect()).collect();
    TimeSeriesGraph::new(g, cross, auto).expect("generated lag sets are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unlabeled_dag_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| all_dag_shapes(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 6, 31, 302]);
    }
}
