//! Rational identification of link functions from the spectrum.
//!
//! All formulas use the spectrum over the observed vertices with the
//! orientation `S = (I - H^T)^{-1} S^LI (I - H^*)^{-1}`.

mod cpdag;
mod recover;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{htr, lfhtc_check, lfhtc_order, lfhtc_prerequisites, Edge, GraphError, LfhtcTriple, ProcessGraph, Vid};
use crate::ratlinalg::LinalgError;
use crate::svar::{observed_spectrum, sample_stable_params, SvarError, SvarParams, DEFAULT_MAGNITUDE};
use crate::{RatFn, RatMatrix, TimeSeriesGraph};

pub use cpdag::{cpdag_of_dag, discover_cpdag, dsep_oracle, spectral_oracle, Cpdag};
pub use recover::{lag_resultant, recover_for_edge, recover_lag_coefficients, LagCoefficients};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdentifyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Svar(#[from] SvarError),
    #[error("S_{{{v},{u}}} is identically zero, so {u} is not an instrument")]
    ZeroInstrument { u: String, v: String },
    #[error("the identification system for {0:?} is singular (non-generic parameters)")]
    Singular(String),
    #[error("link function of {from:?} -> {to:?} is required but not known")]
    MissingPrerequisite { from: String, to: String },
    #[error("the triple does not satisfy the criterion for {vertex:?}: {codes:?}")]
    CriterionFails { vertex: String, codes: Vec<&'static str> },
    #[error("the denominator has zero constant term")]
    ZeroConstantTerm,
    #[error("coefficients of {from:?} -> {to:?} are not recoverable: {reason}")]
    NotRecoverable { from: String, to: String, reason: String },
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("spectrum has no row for {0:?}")]
    MissingLabel(String),
}

/// Spectrum entries addressed by vertex id.
struct Spec<'a> {
    s: &'a RatMatrix,
    row: Vec<usize>,
    col: Vec<usize>,
}

impl<'a> Spec<'a> {
    fn new(g: &ProcessGraph, s: &'a RatMatrix) -> Result<Self, IdentifyError> {
        let mut row = Vec::with_capacity(g.n_observed());
        let mut col = Vec::with_capacity(g.n_observed());
        for v in g.observed().iter() {
            let l = g.label(v);
            row.push(s.row_index(l).map_err(|_| IdentifyError::MissingLabel(l.into()))?);
            col.push(s.col_index(l).map_err(|_| IdentifyError::MissingLabel(l.into()))?);
        }
        Ok(Spec { s, row, col })
    }

    fn at(&self, a: Vid, b: Vid) -> &RatFn {
        self.s.get(self.row[a], self.col[b])
    }
}

fn edge_labels(g: &ProcessGraph, (u, v): Edge) -> (String, String) {
    (g.label(u).to_string(), g.label(v).to_string())
}

fn solve_square(a: Vec<Vec<RatFn>>, rhs: Vec<RatFn>, vertex: &str) -> Result<Vec<RatFn>, IdentifyError> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    RatMatrix::from_rows(a)?.solve(&rhs).map_err(|e| match e {
        LinalgError::Singular => IdentifyError::Singular(vertex.into()),
        e => e.into(),
    })
}

/// Regression on the observed parents: solves `sum_u h_{u,v} S_{u,y} = S_{v,y}`
/// for `y` in `pa_O(v)`. Valid when no latent trek reaches `v` and its parents.
pub fn identify_regression(g: &ProcessGraph, s: &RatMatrix, v: Vid) -> Result<BTreeMap<Edge, RatFn>, IdentifyError> {
    let sp = Spec::new(g, s)?;
    let pa = g.pa_o(v).to_vec();
    let a = pa.iter().map(|&y| pa.iter().map(|&u| sp.at(u, y).clone()).collect()).collect();
    let rhs = pa.iter().map(|&y| sp.at(v, y).clone()).collect();
    let h = solve_square(a, rhs, g.label(v))?;
    Ok(pa.into_iter().map(|u| (u, v)).zip(h).collect())
}

/// `h_{v,w} = S_{w,u} / S_{v,u}` for an instrument `u` of `v -> w`.
pub fn identify_instrument(s: &RatMatrix, u: &str, v: &str, w: &str) -> Result<RatFn, IdentifyError> {
    let den = s.entry(v, u)?;
    if den.is_zero() {
        return Err(IdentifyError::ZeroInstrument { u: u.into(), v: v.into() });
    }
    Ok(s.entry(w, u)?.checked_div(den).expect("nonzero"))
}

/// The linear system of one identification step and its solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepSolution {
    /// Rows `Y`, columns `pa_O(v)`.
    pub a: RatMatrix,
    /// Rows `Y`, columns `W`.
    pub b: RatMatrix,
    /// Indexed by `Y`.
    pub g: Vec<RatFn>,
    /// `h_{x,v}` for every observed parent `x`.
    pub solved: BTreeMap<Edge, RatFn>,
    /// Auxiliary unknowns indexed by `W`; not identified quantities.
    pub auxiliary: BTreeMap<Vid, RatFn>,
}

/// Solves `[A B] [h; f] = g` for the triple `t` of `v`.
///
/// For `y` outside `htr_{L'}(W + v)`: `A_{y,u} = S_{u,y}`,
/// `B_{y,w} = [(I - H^T) S]_{w,y}`, `g_y = S_{v,y}`. For `y` inside, the
/// column side is also multiplied by `(I - H^*)`, which needs the link
/// functions into `y`.
pub fn lfhtc_identify_step(
    g: &ProcessGraph,
    s: &RatMatrix,
    v: Vid,
    t: &LfhtcTriple,
    known: &BTreeMap<Edge, RatFn>,
) -> Result<StepSolution, IdentifyError> {
    let verdict = lfhtc_check(g, v, t)?;
    if !verdict.holds() {
        return Err(IdentifyError::CriterionFails {
            vertex: g.label(v).into(),
            codes: verdict.failed.iter().map(|c| c.code()).collect(),
        });
    }
    if let Some(&e) = lfhtc_prerequisites(g, v, t).iter().find(|e| !known.contains_key(e)) {
        let (from, to) = edge_labels(g, e);
        return Err(IdentifyError::MissingPrerequisite { from, to });
    }
    let sp = Spec::new(g, s)?;
    let reach = htr(g, t.w.with(v), t.lp);
    let h = |x: Vid, y: Vid| &known[&(x, y)];
    // [(I - H^T) S]_{w,y}
    let hs = |w: Vid, y: Vid| -> RatFn {
        let mut acc = sp.at(w, y).clone();
        for x in g.pa_o(w).iter() {
            acc = &acc - &(h(x, w) * sp.at(x, y));
        }
        acc
    };
    // right multiplication by (I - H^*) in column y
    let right = |f: &dyn Fn(Vid) -> RatFn, y: Vid| -> RatFn {
        let mut acc = f(y);
        for x in g.pa_o(y).iter() {
            acc = &acc - &(&f(x) * &h(x, y).conj());
        }
        acc
    };
    let pa = g.pa_o(v).to_vec();
    let ys = t.y.to_vec();
    let ws = t.w.to_vec();
    let mut a_rows = Vec::with_capacity(ys.len());
    let mut b_rows = Vec::with_capacity(ys.len());
    let mut rhs = Vec::with_capacity(ys.len());
    for &y in &ys {
        if reach.contains(y) {
            a_rows.push(pa.iter().map(|&u| right(&|x| sp.at(u, x).clone(), y)).collect::<Vec<_>>());
            b_rows.push(ws.iter().map(|&w| right(&|x| hs(w, x), y)).collect::<Vec<_>>());
            rhs.push(right(&|x| sp.at(v, x).clone(), y));
        } else {
            a_rows.push(pa.iter().map(|&u| sp.at(u, y).clone()).collect());
            b_rows.push(ws.iter().map(|&w| hs(w, y)).collect());
            rhs.push(sp.at(v, y).clone());
        }
    }
    let full: Vec<Vec<RatFn>> = a_rows.iter().zip(&b_rows).map(|(a, b)| a.iter().chain(b).cloned().collect()).collect();
    let x = solve_square(full, rhs.clone(), g.label(v))?;
    let yl = g.labels_of(t.y);
    let a = RatMatrix::new(yl.clone(), g.labels_of(g.pa_o(v)), a_rows)?;
    let b = RatMatrix::new(yl, g.labels_of(t.w), b_rows)?;
    let solved = pa.iter().map(|&u| (u, v)).zip(x.iter().cloned()).collect();
    let auxiliary = ws.iter().copied().zip(x[pa.len()..].iter().cloned()).collect();
    Ok(StepSolution { a, b, g: rhs, solved, auxiliary })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Regression,
    Lfhtc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleLabels {
    pub y: Vec<String>,
    pub w: Vec<String>,
    pub latent: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSystem {
    pub a: RatMatrix,
    pub b: RatMatrix,
    pub g: Vec<RatFn>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvedLink {
    pub from: String,
    pub to: String,
    pub link: RatFn,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxiliaryValue {
    pub w: String,
    pub value: RatFn,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateStep {
    pub vertex: String,
    pub method: Method,
    pub triple: TripleLabels,
    pub system: StepSystem,
    pub solved: Vec<SolvedLink>,
    pub auxiliary: Vec<AuxiliaryValue>,
}

/// Ordered identification steps; every step only uses link functions solved
/// by earlier steps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationCertificate {
    pub steps: Vec<CertificateStep>,
    /// Vertices with observed parents that no step covers.
    pub unresolved: Vec<String>,
    /// Observed edges into unresolved vertices.
    pub unresolved_edges: Vec<(String, String)>,
}

impl IdentificationCertificate {
    /// All solved link functions keyed by (from, to) labels.
    pub fn links(&self) -> BTreeMap<(String, String), RatFn> {
        self.steps
            .iter()
            .flat_map(|s| s.solved.iter().map(|l| ((l.from.clone(), l.to.clone()), l.link.clone())))
            .collect()
    }
}

fn make_step(g: &ProcessGraph, v: Vid, t: &LfhtcTriple, sol: StepSolution) -> CertificateStep {
    let method = if t.lp.is_empty() && t.y == g.pa_o(v) { Method::Regression } else { Method::Lfhtc };
    CertificateStep {
        vertex: g.label(v).into(),
        method,
        triple: TripleLabels { y: g.labels_of(t.y), w: g.labels_of(t.w), latent: g.labels_of(t.lp) },
        system: StepSystem { a: sol.a, b: sol.b, g: sol.g },
        solved: sol
            .solved
            .into_iter()
            .map(|(e, link)| {
                let (from, to) = edge_labels(g, e);
                SolvedLink { from, to, link }
            })
            .collect(),
        auxiliary: sol.auxiliary.into_iter().map(|(w, value)| AuxiliaryValue { w: g.label(w).into(), value }).collect(),
    }
}

fn run_steps(
    g: &ProcessGraph,
    s: &RatMatrix,
    steps: &[(Vid, LfhtcTriple)],
    unresolved: &[Vid],
) -> Result<IdentificationCertificate, IdentifyError> {
    let mut known = BTreeMap::new();
    let mut out = Vec::with_capacity(steps.len());
    for (v, t) in steps {
        let sol = lfhtc_identify_step(g, s, *v, t, &known)?;
        known.extend(sol.solved.iter().map(|(e, h)| (*e, h.clone())));
        out.push(make_step(g, *v, t, sol));
    }
    let unresolved_edges =
        unresolved.iter().flat_map(|&v| g.pa_o(v).iter().map(move |u| edge_labels(g, (u, v)))).collect();
    Ok(IdentificationCertificate {
        steps: out,
        unresolved: unresolved.iter().map(|&v| g.label(v).to_string()).collect(),
        unresolved_edges,
    })
}

/// Identifies every link function the criterion reaches, in the order found
/// by repeated triple search.
pub fn identify_all(g: &ProcessGraph, s: &RatMatrix) -> Result<IdentificationCertificate, IdentifyError> {
    let order = lfhtc_order(g);
    run_steps(g, s, &order.steps, &order.unresolved)
}

/// Re-executes the steps of a certificate against a spectrum.
pub fn replay(
    g: &ProcessGraph,
    cert: &IdentificationCertificate,
    s: &RatMatrix,
) -> Result<IdentificationCertificate, IdentifyError> {
    let mut steps = Vec::with_capacity(cert.steps.len());
    for st in &cert.steps {
        let v = g.id(&st.vertex)?;
        let t = LfhtcTriple::from_labels(g, &st.triple.y, &st.triple.w, &st.triple.latent)?;
        steps.push((v, t));
    }
    let unresolved = g.ids(&cert.unresolved)?;
    let out = run_steps(g, s, &steps, &unresolved).map_err(|e| match e {
        IdentifyError::MissingPrerequisite { from, to } => {
            IdentifyError::InvalidCertificate(format!("{from} -> {to} is used before it is solved"))
        }
        e => e,
    })?;
    for (a, b) in cert.steps.iter().zip(&out.steps) {
        if a.method != b.method {
            return Err(IdentifyError::InvalidCertificate(format!("method of {} does not match its triple", a.vertex)));
        }
    }
    Ok(out)
}

/// Result of identification on sampled parameters.
#[derive(Clone, Debug)]
pub struct SampledIdentification {
    pub seed: u64,
    pub params: SvarParams,
    pub spectrum: RatMatrix,
    pub certificate: IdentificationCertificate,
    /// Seeds whose parameters gave a singular system.
    pub rejected_seeds: Vec<u64>,
}

/// Samples parameters with `seed`, computes the spectrum and identifies.
/// On a singular system, retries with `seed + 1`, ... up to `retries` times.
pub fn identify_sampled(tsg: &TimeSeriesGraph, seed: u64, retries: usize) -> Result<SampledIdentification, IdentifyError> {
    identify_sampled_with(tsg, seed, retries, DEFAULT_MAGNITUDE)
}

/// [`identify_sampled`] with an explicit numerator bound for the sampler.
pub fn identify_sampled_with(
    tsg: &TimeSeriesGraph,
    seed: u64,
    retries: usize,
    magnitude_bound: u32,
) -> Result<SampledIdentification, IdentifyError> {
    let g = tsg.graph();
    let mut rejected = Vec::new();
    let mut last = None;
    for i in 0..=retries {
        let sd = seed.wrapping_add(i as u64);
        let params = sample_stable_params(tsg, sd, magnitude_bound);
        let spectrum = observed_spectrum(tsg, &params)?;
        match identify_all(g, &spectrum) {
            Ok(certificate) => {
                return Ok(SampledIdentification { seed: sd, params, spectrum, certificate, rejected_seeds: rejected })
            }
            Err(e @ IdentifyError::Singular(_)) => {
                rejected.push(sd);
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svar::link_function;

    #[test]
    fn regression_on_chain() {
        let g = ProcessGraph::observed_only(&["u", "v", "w"], &[("u", "v"), ("v", "w")]).unwrap();
        let tsg = TimeSeriesGraph::uniform(g, &[0, 1], &[1]).unwrap();
        let p = sample_stable_params(&tsg, 5, DEFAULT_MAGNITUDE);
        let s = observed_spectrum(&tsg, &p).unwrap();
        let g = tsg.graph();
        for v in [1, 2] {
            let h = identify_regression(g, &s, v).unwrap();
            assert_eq!(h[&(v - 1, v)], link_function(&tsg, &p, v - 1, v).unwrap());
        }
        let cert = identify_all(g, &s).unwrap();
        assert!(cert.steps.iter().all(|st| st.method == Method::Regression));
        assert_eq!(replay(g, &cert, &s).unwrap(), cert);
    }

    #[test]
    fn missing_prerequisite_is_reported() {
        let g = ProcessGraph::new(
            &["v1", "v2", "v3", "v4", "v5"],
            &["l"],
            &[("v2", "v3"), ("v3", "v4"), ("v4", "v5"), ("l", "v1"), ("l", "v2"), ("l", "v3"), ("l", "v4"), ("l", "v5")],
        )
        .unwrap();
        let tsg = TimeSeriesGraph::uniform(g, &[0, 1], &[1]).unwrap();
        let p = sample_stable_params(&tsg, 1, DEFAULT_MAGNITUDE);
        let s = observed_spectrum(&tsg, &p).unwrap();
        let g = tsg.graph();
        let t = LfhtcTriple::from_labels(g, &["v1", "v2"], &["v4"], &["l"]).unwrap();
        let err = lfhtc_identify_step(g, &s, 2, &t, &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, IdentifyError::MissingPrerequisite { .. }));
    }
}
