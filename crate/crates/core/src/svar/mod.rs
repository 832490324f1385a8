//! SVAR parameters and their frequency-domain parameterization.
//!
//! Conventions: `H[v][w] = h_{v,w}` is the link function of `v -> w`, and
//! `S = (I - H^T)^{-1} S^LI (I - H^*)^{-1}`. Entry `S[a][b]` is the sum over
//! treks whose left side ends in `a` and right side ends in `b` of
//! `h^{left} * S^I_top * (h^{right})^*`, so `S^T = S^*` entrywise.

mod params;
mod sample;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    enumerate_treks, nonintersecting_path_systems, sided_nonintersecting_trek_systems, Edge, GraphError,
    ProcessGraph, TimeSeriesGraph, Trek, VertexSet, Vid,
};
use crate::ratlinalg::LinalgError;
use crate::{Poly, RatFn, RatMatrix, Rational};

pub use params::{AutoSpec, CrossSpec, NoiseSpec, ParamsSpec, SvarParams};
pub use sample::{sample_stable_params, DEFAULT_MAGNITUDE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SvarError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("parameters do not match the graph: {0}")]
    Keys(String),
    #[error("unstable parameters: {0}")]
    Unstable(String),
    #[error("no edge {from:?} -> {to:?}")]
    NoSuchEdge { from: String, to: String },
    #[error("invalid path: {0}")]
    InvalidPath(String),
}

/// `sum_k phi_{x,y}(k) z^k`; for `x == y` the auto lag polynomial.
pub fn lag_poly(tsg: &TimeSeriesGraph, params: &SvarParams, x: Vid, y: Vid) -> Result<Poly, SvarError> {
    let g = tsg.graph();
    let terms: Vec<(u32, Rational)> = if x == y {
        params.auto_lags(x).map(|(k, c)| (k, c.clone())).collect()
    } else {
        if !g.has_edge(x, y) {
            return Err(SvarError::NoSuchEdge { from: g.label(x).into(), to: g.label(y).into() });
        }
        params.cross_lags(x, y).map(|(k, c)| (k, c.clone())).collect()
    };
    let deg = terms.iter().map(|&(k, _)| k as usize).max().unwrap_or(0);
    let mut coeffs = vec![Rational::from_integer(0.into()); deg + 1];
    for (k, c) in terms {
        coeffs[k as usize] = c;
    }
    Ok(Poly::from_coeffs(coeffs))
}

fn one_minus_auto(tsg: &TimeSeriesGraph, params: &SvarParams, v: Vid) -> Poly {
    &Poly::one() - &lag_poly(tsg, params, v, v).expect("auto polynomial always exists")
}

/// `h_{v,w} = phi_{v,w} / (1 - phi_{w,w})`.
pub fn link_function(tsg: &TimeSeriesGraph, params: &SvarParams, v: Vid, w: Vid) -> Result<RatFn, SvarError> {
    if v == w {
        let g = tsg.graph();
        return Err(SvarError::NoSuchEdge { from: g.label(v).into(), to: g.label(w).into() });
    }
    let num = lag_poly(tsg, params, v, w)?;
    Ok(RatFn::new(num, one_minus_auto(tsg, params, w)).expect("stable auto polynomial is nonzero at 0"))
}

/// Link functions of all edges.
pub fn link_functions(tsg: &TimeSeriesGraph, params: &SvarParams) -> BTreeMap<Edge, RatFn> {
    tsg.graph()
        .edges()
        .iter()
        .map(|&(u, v)| ((u, v), link_function(tsg, params, u, v).expect("edge exists")))
        .collect()
}

/// Direct transfer matrix over all vertices, zero off the edge set.
pub fn transfer_matrix(tsg: &TimeSeriesGraph, params: &SvarParams) -> RatMatrix {
    let g = tsg.graph();
    let labels = g.labels().to_vec();
    let mut h = RatMatrix::zeros(labels.clone(), labels).expect("distinct labels");
    for ((u, v), f) in link_functions(tsg, params) {
        h.set(u, v, f);
    }
    h
}

/// `S^I_v = omega_v / ((1 - phi_{v,v}) (1 - phi_{v,v})^*)`.
pub fn internal_entry(tsg: &TimeSeriesGraph, params: &SvarParams, v: Vid) -> RatFn {
    let inv = RatFn::new(Poly::one(), one_minus_auto(tsg, params, v)).expect("nonzero");
    (&inv * &inv.conj()).scale(params.noise(v))
}

/// Diagonal internal spectrum over all vertices.
pub fn internal_spectrum(tsg: &TimeSeriesGraph, params: &SvarParams) -> RatMatrix {
    let g = tsg.graph();
    let labels = g.labels().to_vec();
    let mut s = RatMatrix::zeros(labels.clone(), labels).expect("distinct labels");
    for v in 0..g.n() {
        s.set(v, v, internal_entry(tsg, params, v));
    }
    s
}

/// `S^LI = S^I_O + [H]_{L,O}^T S^I_L [H]_{L,O}^*` over the observed vertices.
pub fn projected_internal_spectrum(tsg: &TimeSeriesGraph, params: &SvarParams) -> RatMatrix {
    let g = tsg.graph();
    let links = link_functions(tsg, params);
    let si: Vec<RatFn> = (0..g.n()).map(|v| internal_entry(tsg, params, v)).collect();
    let labels = g.observed_labels().to_vec();
    let mut s = RatMatrix::zeros(labels.clone(), labels).expect("distinct labels");
    for a in g.observed().iter() {
        for b in g.observed().iter() {
            let mut acc = if a == b { si[a].clone() } else { RatFn::zero() };
            for l in g.pa_l(a).intersection(g.pa_l(b)).iter() {
                acc = &acc + &(&(&links[&(l, a)] * &si[l]) * &links[&(l, b)].conj());
            }
            s.set(a, b, acc);
        }
    }
    s
}

/// `(I - H^T)^{-1}` restricted to `verts`: entry `[a][x]` sums the path
/// functions of the directed paths from `x` to `a`.
fn path_matrix(g: &ProcessGraph, links: &BTreeMap<Edge, RatFn>, verts: VertexSet) -> Result<RatMatrix, SvarError> {
    let ids = verts.to_vec();
    let labels: Vec<String> = ids.iter().map(|&v| g.label(v).to_string()).collect();
    let pos = |v: Vid| ids.iter().position(|&x| x == v).expect("in set");
    if g.is_acyclic() {
        let n = ids.len();
        let mut rows: Vec<Option<Vec<RatFn>>> = vec![None; n];
        for v in g.topo_order()? {
            if !verts.contains(v) {
                continue;
            }
            let mut row = vec![RatFn::zero(); n];
            row[pos(v)] = RatFn::one();
            for p in g.parents(v).intersection(verts).iter() {
                let h = &links[&(p, v)];
                let prow = rows[pos(p)].as_ref().expect("parents come first");
                for (r, pr) in row.iter_mut().zip(prow) {
                    if !pr.is_zero() {
                        *r = &*r + &(h * pr);
                    }
                }
            }
            rows[pos(v)] = Some(row);
        }
        let entries = rows.into_iter().map(|r| r.expect("all placed")).collect();
        return Ok(RatMatrix::new(labels.clone(), labels, entries)?);
    }
    let mut m = RatMatrix::identity(labels.clone())?;
    for (i, &a) in ids.iter().enumerate() {
        for (j, &x) in ids.iter().enumerate() {
            if let Some(h) = links.get(&(x, a)) {
                m.set(i, j, -h.clone());
            }
        }
    }
    Ok(m.inverse()?)
}

/// `P C P^{*T}`.
fn sandwich(p: &RatMatrix, c: &RatMatrix) -> Result<RatMatrix, SvarError> {
    Ok(p.mul(c)?.mul(&p.conj().transpose())?)
}

/// The parameterization: transfer matrix, internal spectra, and spectrum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumBundle {
    /// Over all vertices.
    pub h: RatMatrix,
    /// Over all vertices, diagonal.
    pub s_i: RatMatrix,
    /// Over the observed vertices.
    pub s_li: RatMatrix,
    /// Over the observed vertices.
    pub s: RatMatrix,
}

pub fn spectrum(tsg: &TimeSeriesGraph, params: &SvarParams) -> Result<SpectrumBundle, SvarError> {
    let g = tsg.graph();
    let links = link_functions(tsg, params);
    let s_li = projected_internal_spectrum(tsg, params);
    let p = path_matrix(g, &links, g.observed())?;
    let s = sandwich(&p, &s_li)?;
    Ok(SpectrumBundle { h: transfer_matrix(tsg, params), s_i: internal_spectrum(tsg, params), s_li, s })
}

/// Spectrum over the observed vertices only.
pub fn observed_spectrum(tsg: &TimeSeriesGraph, params: &SvarParams) -> Result<RatMatrix, SvarError> {
    Ok(spectrum(tsg, params)?.s)
}

/// Spectrum over all vertices, as if the latent ones were observed.
pub fn full_spectrum(tsg: &TimeSeriesGraph, params: &SvarParams) -> Result<RatMatrix, SvarError> {
    let g = tsg.graph();
    let links = link_functions(tsg, params);
    let p = path_matrix(g, &links, g.all())?;
    sandwich(&p, &internal_spectrum(tsg, params))
}

/// Product of link functions along a path; the empty path gives 1.
pub fn path_function(tsg: &TimeSeriesGraph, params: &SvarParams, path: &[Vid]) -> Result<RatFn, SvarError> {
    let g = tsg.graph();
    if path.is_empty() || path.iter().any(|&v| v >= g.n()) {
        return Err(SvarError::InvalidPath("a path needs at least one known vertex".into()));
    }
    let mut acc = RatFn::one();
    for w in path.windows(2) {
        if !g.has_edge(w[0], w[1]) {
            return Err(SvarError::InvalidPath(format!("no edge {} -> {}", g.label(w[0]), g.label(w[1]))));
        }
        acc = &acc * &link_function(tsg, params, w[0], w[1])?;
    }
    Ok(acc)
}

/// `h^{left} S^I_top (h^{right})^*`.
pub fn trek_function(tsg: &TimeSeriesGraph, params: &SvarParams, t: &Trek) -> Result<RatFn, SvarError> {
    let left = path_function(tsg, params, &t.left)?;
    let right = path_function(tsg, params, &t.right)?;
    Ok(&(&left * &internal_entry(tsg, params, t.top)) * &right.conj())
}

/// The spectrum over the observed vertices, entry by entry as sums of trek
/// functions.
pub fn spectrum_trek(tsg: &TimeSeriesGraph, params: &SvarParams) -> Result<RatMatrix, SvarError> {
    let g = tsg.graph();
    g.require_acyclic()?;
    let links = link_functions(tsg, params);
    let si: Vec<RatFn> = (0..g.n()).map(|v| internal_entry(tsg, params, v)).collect();
    let pf = |p: &[Vid]| -> RatFn { p.windows(2).map(|w| links[&(w[0], w[1])].clone()).product() };
    let labels = g.observed_labels().to_vec();
    let mut s = RatMatrix::zeros(labels.clone(), labels)?;
    for a in g.observed().iter() {
        for b in g.observed().iter() {
            let mut acc = RatFn::zero();
            for t in enumerate_treks(g, a, b)? {
                acc = &acc + &(&(&pf(&t.left) * &si[t.top]) * &pf(&t.right).conj());
            }
            s.set(a, b, acc);
        }
    }
    Ok(s)
}

/// `S_{X,Y} - S_{X,Z} S_{Z,Z}^{-1} S_{Z,Y}`.
pub fn conditional_spectrum<S: AsRef<str>>(s: &RatMatrix, x: &[S], y: &[S], z: &[S]) -> Result<RatMatrix, SvarError> {
    for (i, a) in [x, y, z].iter().enumerate() {
        for b in [x, y, z].iter().skip(i + 1) {
            if let Some(l) = a.iter().find(|l| b.iter().any(|m| m.as_ref() == l.as_ref())) {
                return Err(GraphError::Overlap(format!("{:?} appears in two of X, Y, Z", l.as_ref())).into());
            }
        }
    }
    let sxy = s.submatrix(x, y)?;
    if z.is_empty() {
        return Ok(sxy);
    }
    let correction = s.submatrix(x, z)?.mul(&s.submatrix(z, z)?.solve_matrix(&s.submatrix(z, y)?)?)?;
    Ok(sxy.sub(&correction)?)
}

/// Largest rank of `[S]_{X,Y}` over `trials` sampled parameter sets; trial
/// `i` uses seed `seed + i`. Sets containing latent vertices use the
/// spectrum over all vertices.
pub fn generic_rank(
    tsg: &TimeSeriesGraph,
    x: VertexSet,
    y: VertexSet,
    trials: usize,
    seed: u64,
) -> Result<usize, SvarError> {
    let g = tsg.graph();
    let xl = g.labels_of(x);
    let yl = g.labels_of(y);
    let mut best = 0;
    for i in 0..trials.max(1) {
        let params = sample_stable_params(tsg, seed.wrapping_add(i as u64), DEFAULT_MAGNITUDE);
        let s = if x.union(y).is_subset(g.observed()) {
            observed_spectrum(tsg, &params)?
        } else {
            full_spectrum(tsg, &params)?
        };
        best = best.max(s.submatrix(&xl, &yl)?.rank());
    }
    Ok(best)
}

/// Signed sum over vertex-disjoint path systems from `X` to `Y`; equals
/// `det([(I - H)^{-1}]_{X,Y})`.
pub fn det_path_expansion(tsg: &TimeSeriesGraph, params: &SvarParams, x: &[Vid], y: &[Vid]) -> Result<RatFn, SvarError> {
    let mut acc = RatFn::zero();
    for sys in nonintersecting_path_systems(tsg.graph(), x, y)? {
        let mut term = RatFn::one();
        for p in &sys.paths {
            term = &term * &path_function(tsg, params, p)?;
        }
        acc = if sys.sign > 0 { &acc + &term } else { &acc - &term };
    }
    Ok(acc)
}

/// Signed sum over trek systems without sided intersection from `X` to `Y`;
/// equals `det([S]_{X,Y})` for the spectrum over all vertices.
pub fn det_trek_expansion(tsg: &TimeSeriesGraph, params: &SvarParams, x: &[Vid], y: &[Vid]) -> Result<RatFn, SvarError> {
    let mut acc = RatFn::zero();
    for sys in sided_nonintersecting_trek_systems(tsg.graph(), x, y)? {
        let mut term = RatFn::one();
        for t in &sys.treks {
            term = &term * &trek_function(tsg, params, t)?;
        }
        acc = if sys.sign > 0 { &acc + &term } else { &acc - &term };
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSpec;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn instrument() -> (TimeSeriesGraph, SvarParams) {
        let spec: GraphSpec = serde_json::from_str(
            r#"{"observed":["u","v","w"],"latent":["l"],
                "edges":[{"from":"u","to":"v","lags":[0,1]},{"from":"v","to":"w","lags":[1]},
                         {"from":"l","to":"v","lags":[0]},{"from":"l","to":"w","lags":[0,2]}],
                "auto":{"u":[1],"v":[1],"w":[1,2],"l":[1]}}"#,
        )
        .unwrap();
        let tsg = TimeSeriesGraph::from_spec(&spec).unwrap();
        let params = sample_stable_params(&tsg, 11, DEFAULT_MAGNITUDE);
        (tsg, params)
    }

    #[test]
    fn lag_poly_reads_coefficients() {
        let (tsg, p) = instrument();
        let (u, v) = (0, 1);
        let f = lag_poly(&tsg, &p, u, v).unwrap();
        assert_eq!(f.coeffs(), &[p.cross(u, v, 0).unwrap().clone(), p.cross(u, v, 1).unwrap().clone()]);
        assert!(matches!(lag_poly(&tsg, &p, 2, 0), Err(SvarError::NoSuchEdge { .. })));
        let none = TimeSeriesGraph::uniform(ProcessGraph::observed_only(&["a"], &[]).unwrap(), &[], &[]).unwrap();
        let pn = SvarParams::new(&none, BTreeMap::new(), BTreeMap::new(), vec![q(1, 1)]).unwrap();
        assert!(lag_poly(&none, &pn, 0, 0).unwrap().is_zero());
        assert_eq!(observed_spectrum(&none, &pn).unwrap().get(0, 0), &RatFn::one());
    }

    #[test]
    fn matrix_formula_matches_trek_rule() {
        let (tsg, p) = instrument();
        let s = observed_spectrum(&tsg, &p).unwrap();
        assert_eq!(s, spectrum_trek(&tsg, &p).unwrap());
        assert_eq!(s.conj(), s.transpose());
        let full = full_spectrum(&tsg, &p).unwrap();
        assert_eq!(full.submatrix(&["u", "v", "w"], &["u", "v", "w"]).unwrap(), s);
    }

    #[test]
    fn determinant_expansions() {
        let (tsg, p) = instrument();
        let g = tsg.graph();
        let h = transfer_matrix(&tsg, &p);
        let labels = g.labels().to_vec();
        let inv = RatMatrix::identity(labels.clone()).unwrap().sub(&h).unwrap().inverse().unwrap();
        let full = full_spectrum(&tsg, &p).unwrap();
        for (x, y) in [(vec![0, 3], vec![1, 2]), (vec![0, 1], vec![1, 2]), (vec![1], vec![1])] {
            let xl: Vec<&str> = x.iter().map(|&i| g.label(i)).collect();
            let yl: Vec<&str> = y.iter().map(|&i| g.label(i)).collect();
            assert_eq!(det_path_expansion(&tsg, &p, &x, &y).unwrap(), inv.submatrix(&xl, &yl).unwrap().det().unwrap());
            assert_eq!(det_trek_expansion(&tsg, &p, &x, &y).unwrap(), full.submatrix(&xl, &yl).unwrap().det().unwrap());
        }
    }

    #[test]
    fn conditional_spectrum_of_chain_vanishes() {
        let g = ProcessGraph::observed_only(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        let tsg = TimeSeriesGraph::uniform(g, &[0, 1], &[1]).unwrap();
        let p = sample_stable_params(&tsg, 3, DEFAULT_MAGNITUDE);
        let s = observed_spectrum(&tsg, &p).unwrap();
        assert!(conditional_spectrum(&s, &["a"], &["c"], &["b"]).unwrap().is_zero());
        assert!(!conditional_spectrum(&s, &["a"], &["c"], &[] as &[&str]).unwrap().is_zero());
        assert!(conditional_spectrum(&s, &["a"], &["a"], &["b"]).is_err());
    }

    #[test]
    fn instability_is_rejected() {
        let g = ProcessGraph::observed_only(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        let tsg = TimeSeriesGraph::uniform(g, &[1], &[]).unwrap();
        let cross: BTreeMap<_, _> = [(((0, 1), 1), q(1, 2)), (((1, 0), 1), q(1, 2))].into_iter().collect();
        let err = SvarParams::new(&tsg, cross.clone(), BTreeMap::new(), vec![q(1, 1); 2]).unwrap_err();
        assert!(matches!(err, SvarError::Unstable(_)));
        let mut ok = cross;
        ok.insert(((1, 0), 1), q(1, 3));
        assert!(SvarParams::new(&tsg, ok, BTreeMap::new(), vec![q(1, 1); 2]).is_ok());
    }
}
