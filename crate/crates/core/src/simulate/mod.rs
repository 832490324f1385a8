//! Time-domain simulation and Welch spectral estimation.
//!
//! This is the only floating point part of the crate. Exact spectra enter
//! through [`evaluate_spectrum`].

mod welch;

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::graph::{TimeSeriesGraph, Vid};
use crate::ratfield::rational_to_f64;
use crate::svar::SvarParams;
use crate::RatMatrix;

pub use welch::{empirical_ci_test, estimate_spectrum, partial_coherence, SpectrumEstimate, SpectrumEstimateFile};

#[derive(Debug, Error)]
pub enum SimulateError {
    #[error("contemporaneous (lag 0) edges form a cycle through {0:?}")]
    ContemporaneousCycle(String),
    #[error("invalid segmentation: {0}")]
    InvalidSegmentation(String),
    #[error("invalid frequencies: {0}")]
    InvalidFrequencies(String),
    #[error("conditioning block is ill-conditioned at theta = {theta} (condition number {cond:e})")]
    IllConditioned { theta: f64, cond: f64 },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("X, Y and Z must be nonempty where required and pairwise disjoint")]
    BadSets,
    #[error("series file: {0}")]
    Csv(#[from] csv::Error),
    #[error("series file: {0}")]
    Format(String),
    #[error("spectrum has a pole on the unit circle at theta = {0}")]
    Pole(f64),
}

/// Simulated or loaded observations: `values[t][j]` is variable `labels[j]`
/// at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesSample {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SeriesSample {
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self, SimulateError> {
        if let Some(t) = values.iter().position(|r| r.len() != labels.len()) {
            return Err(SimulateError::Format(format!("row {t} has {} values for {} labels", values[t].len(), labels.len())));
        }
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(SimulateError::Format("non-finite value".into()));
        }
        Ok(SeriesSample { labels, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    /// First `t` time steps.
    pub fn prefix(&self, t: usize) -> SeriesSample {
        SeriesSample { labels: self.labels.clone(), values: self.values[..t.min(self.len())].to_vec() }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimulateError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.labels)?;
        for row in &self.values {
            wr.write_record(row.iter().map(|x| format!("{x:e}")))?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<SeriesSample, SimulateError> {
        let mut rd = csv::Reader::from_reader(r);
        let labels: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut values = Vec::new();
        for (t, rec) in rd.records().enumerate() {
            let row = rec?
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| SimulateError::Format(format!("row {t}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            values.push(row);
        }
        SeriesSample::new(labels, values)
    }
}

/// Vertices ordered so every lag-0 edge points forward.
fn contemporaneous_order(tsg: &TimeSeriesGraph) -> Result<Vec<Vid>, SimulateError> {
    let g = tsg.graph();
    let n = g.n();
    let lag0: Vec<(Vid, Vid)> =
        tsg.cross_lags().iter().filter(|(_, l)| l.contains(&0)).map(|(&e, _)| e).collect();
    let mut indeg = vec![0usize; n];
    for &(_, v) in &lag0 {
        indeg[v] += 1;
    }
    let mut ready: Vec<Vid> = (0..n).rev().filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(u) = ready.pop() {
        order.push(u);
        for &(a, b) in &lag0 {
            if a == u {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    ready.push(b);
                }
            }
        }
    }
    match (0..n).find(|&v| indeg[v] > 0) {
        Some(v) => Err(SimulateError::ContemporaneousCycle(g.label(v).into())),
        None => Ok(order),
    }
}

/// Runs `X_v(t) = sum phi_{u,v}(k) X_u(t-k) + sum phi_{v,v}(k) X_v(t-k) + eta_v(t)`
/// from a zero start for `burn_in + t_len` steps and returns the observed
/// coordinates of the last `t_len`.
///
/// Noise is Gaussian with variance `omega_v`, drawn from ChaCha8 seeded with
/// `seed`, in time-major then vertex-id order.
pub fn simulate_series(
    tsg: &TimeSeriesGraph,
    params: &SvarParams,
    t_len: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SeriesSample, SimulateError> {
    let g = tsg.graph();
    let n = g.n();
    let order = contemporaneous_order(tsg)?;
    let mut inputs: Vec<Vec<(Vid, usize, f64)>> = vec![Vec::new(); n];
    for (&((u, v), k), c) in params.cross_map() {
        inputs[v].push((u, k as usize, rational_to_f64(c)));
    }
    for (&(v, k), c) in params.auto_map() {
        inputs[v].push((v, k as usize, rational_to_f64(c)));
    }
    let noise: Vec<Option<Normal<f64>>> = params
        .noises()
        .iter()
        .map(|w| {
            let w = rational_to_f64(w);
            (w > 0.0).then(|| Normal::new(0.0, w.sqrt()).expect("positive standard deviation"))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = burn_in + t_len;
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(total);
    for t in 0..total {
        let mut row: Vec<f64> = noise.iter().map(|d| d.map_or(0.0, |d| d.sample(&mut rng))).collect();
        for &v in &order {
            for &(u, k, c) in &inputs[v] {
                let past = match k {
                    0 => row[u],
                    k if k <= t => x[t - k][u],
                    _ => 0.0,
                };
                row[v] += c * past;
            }
        }
        x.push(row);
    }
    let obs: Vec<Vid> = g.observed().to_vec();
    let values = x[burn_in..].iter().map(|r| obs.iter().map(|&v| r[v]).collect()).collect();
    SeriesSample::new(g.observed_labels().to_vec(), values)
}

/// Exact spectrum evaluated at `z = e^{i theta}`.
pub fn evaluate_spectrum(s: &RatMatrix, theta: f64) -> Result<DMatrix<Complex64>, SimulateError> {
    let mut out = DMatrix::zeros(s.nrows(), s.ncols());
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            out[(i, j)] = s.get(i, j).eval_unit(theta).map_err(|_| SimulateError::Pole(theta))?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ProcessGraph;
    use crate::svar::sample_stable_params;
    use crate::Rational;
    use std::collections::BTreeMap;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn contemporaneous_cycle_rejected() {
        let g = ProcessGraph::observed_only(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        let tsg = TimeSeriesGraph::uniform(g, &[0], &[]).unwrap();
        let p = sample_stable_params(&tsg, 0, 64);
        assert!(matches!(simulate_series(&tsg, &p, 10, 0, 0), Err(SimulateError::ContemporaneousCycle(_))));
    }

    #[test]
    fn lagged_cycle_is_fine_and_deterministic() {
        let g = ProcessGraph::observed_only(&["a", "b"], &[("a", "b"), ("b", "a")]).unwrap();
        let tsg = TimeSeriesGraph::uniform(g, &[1], &[]).unwrap();
        let p = sample_stable_params(&tsg, 0, 64);
        let s1 = simulate_series(&tsg, &p, 100, 10, 3).unwrap();
        let s2 = simulate_series(&tsg, &p, 100, 10, 3).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.len(), 100);
    }

    #[test]
    fn zero_noise_gives_zero_series() {
        let g = ProcessGraph::observed_only(&["a", "b"], &[("a", "b")]).unwrap();
        let tsg = TimeSeriesGraph::uniform(g, &[0, 1], &[1]).unwrap();
        let p = SvarParams::new_unchecked(
            &tsg,
            BTreeMap::from([(((0, 1), 0), q(1, 2)), (((0, 1), 1), q(1, 3))]),
            BTreeMap::from([((0, 1), q(1, 2)), ((1, 1), q(1, 4))]),
            vec![q(0, 1), q(0, 1)],
        )
        .unwrap();
        let s = simulate_series(&tsg, &p, 50, 5, 1).unwrap();
        assert!(s.values.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let s = SeriesSample::new(vec!["a".into(), "b".into()], vec![vec![1.5, -2.0], vec![0.1, 3e-9]]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(SeriesSample::read_csv(&buf[..]).unwrap(), s);
    }
}
