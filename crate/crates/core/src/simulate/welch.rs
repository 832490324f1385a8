use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{SeriesSample, SimulateError};

/// Condition number above which a conditioning block is rejected.
const MAX_CONDITION: f64 = 1e10;

/// Cross-spectral matrices over `labels` at increasing angles.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumEstimate {
    pub labels: Vec<String>,
    pub frequencies: Vec<f64>,
    pub matrices: Vec<DMatrix<Complex64>>,
    pub segment_length: usize,
    pub segments: usize,
    pub overlap: f64,
    pub window: String,
}

/// Serialized form of a [`SpectrumEstimate`], real and imaginary parts split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumEstimateFile {
    pub labels: Vec<String>,
    pub frequencies: Vec<f64>,
    pub segment_length: usize,
    pub segments: usize,
    pub overlap: f64,
    pub window: String,
    pub re: Vec<Vec<Vec<f64>>>,
    pub im: Vec<Vec<Vec<f64>>>,
}

impl SpectrumEstimate {
    pub fn index(&self, label: &str) -> Result<usize, SimulateError> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| SimulateError::UnknownLabel(label.into()))
    }

    pub fn to_file(&self) -> SpectrumEstimateFile {
        let part = |f: fn(&Complex64) -> f64| {
            self.matrices
                .iter()
                .map(|m| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect())
                .collect()
        };
        SpectrumEstimateFile {
            labels: self.labels.clone(),
            frequencies: self.frequencies.clone(),
            segment_length: self.segment_length,
            segments: self.segments,
            overlap: self.overlap,
            window: self.window.clone(),
            re: part(|c| c.re),
            im: part(|c| c.im),
        }
    }

    pub fn from_file(f: SpectrumEstimateFile) -> Result<Self, SimulateError> {
        let n = f.labels.len();
        let k = f.frequencies.len();
        check_frequencies(&f.frequencies)?;
        let shaped = |p: &Vec<Vec<Vec<f64>>>| p.len() == k && p.iter().all(|m| m.len() == n && m.iter().all(|r| r.len() == n));
        if !shaped(&f.re) || !shaped(&f.im) {
            return Err(SimulateError::Format(format!("expected {k} matrices of size {n}x{n}")));
        }
        let matrices = f
            .re
            .iter()
            .zip(&f.im)
            .map(|(re, im)| DMatrix::from_fn(n, n, |i, j| Complex64::new(re[i][j], im[i][j])))
            .collect();
        Ok(SpectrumEstimate {
            labels: f.labels,
            frequencies: f.frequencies,
            matrices,
            segment_length: f.segment_length,
            segments: f.segments,
            overlap: f.overlap,
            window: f.window,
        })
    }
}

fn check_frequencies(freqs: &[f64]) -> Result<(), SimulateError> {
    if freqs.is_empty() {
        return Err(SimulateError::InvalidFrequencies("no frequencies".into()));
    }
    if let Some(t) = freqs.iter().find(|t| !(0.0..=PI).contains(*t)) {
        return Err(SimulateError::InvalidFrequencies(format!("{t} is outside [0, pi]")));
    }
    if freqs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimulateError::InvalidFrequencies("not strictly increasing".into()));
    }
    Ok(())
}

/// Welch estimate with a periodic Hann window.
///
/// Segments of length `segment_length` start every
/// `segment_length - round(overlap * segment_length)` samples. Each segment
/// of the demeaned series gives `d(theta) = sum_t w_t x(t) e^{i theta t}`, and
/// the estimate is the mean of `d d^H` divided by `sum_t w_t^2`, so white
/// noise of variance `omega` has flat spectrum `omega`.
pub fn estimate_spectrum(
    series: &SeriesSample,
    frequencies: &[f64],
    segment_length: usize,
    overlap: f64,
) -> Result<SpectrumEstimate, SimulateError> {
    let t_len = series.len();
    let len = segment_length;
    if len < 2 {
        return Err(SimulateError::InvalidSegmentation(format!("segment length {len} is below 2")));
    }
    if len > t_len {
        return Err(SimulateError::InvalidSegmentation(format!("segment length {len} exceeds series length {t_len}")));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(SimulateError::InvalidSegmentation(format!("overlap {overlap} is outside [0, 1)")));
    }
    check_frequencies(frequencies)?;
    let step = len - (overlap * len as f64).round() as usize;
    let starts: Vec<usize> = (0..=t_len - len).step_by(step.max(1)).collect();
    let n = series.labels.len();
    let mean: Vec<f64> = (0..n).map(|j| series.values.iter().map(|r| r[j]).sum::<f64>() / t_len as f64).collect();
    let window: Vec<f64> = (0..len).map(|t| 0.5 - 0.5 * (2.0 * PI * t as f64 / len as f64).cos()).collect();
    let norm = window.iter().map(|w| w * w).sum::<f64>() * starts.len() as f64;
    let matrices = frequencies
        .iter()
        .map(|&theta| {
            let taper: Vec<Complex64> =
                window.iter().enumerate().map(|(t, w)| Complex64::from_polar(*w, theta * t as f64)).collect();
            let mut acc = DMatrix::<Complex64>::zeros(n, n);
            for &s in &starts {
                let d = nalgebra::DVector::from_fn(n, |j, _| {
                    taper.iter().enumerate().map(|(t, e)| e * (series.values[s + t][j] - mean[j])).sum::<Complex64>()
                });
                acc += &d * d.adjoint();
            }
            acc / Complex64::from(norm)
        })
        .collect();
    Ok(SpectrumEstimate {
        labels: series.labels.clone(),
        frequencies: frequencies.to_vec(),
        matrices,
        segment_length: len,
        segments: starts.len(),
        overlap,
        window: "hann".into(),
    })
}

fn block(m: &DMatrix<Complex64>, r: &[usize], c: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(r.len(), c.len(), |i, j| m[(r[i], c[j])])
}

/// Largest normalized conditional cross-spectrum magnitude
/// `|S_{a,b|Z}| / sqrt(S_{a,a|Z} S_{b,b|Z})` over `a` in `X`, `b` in `Y` and
/// all frequencies.
///
/// Fails with `IllConditioned` when `S_{Z,Z}` has condition number above
/// 1e10, or when some conditional variance is below 1e-10 of its
/// unconditional value.
pub fn partial_coherence(est: &SpectrumEstimate, x: &[&str], y: &[&str], z: &[&str]) -> Result<f64, SimulateError> {
    let idx = |s: &[&str]| s.iter().map(|l| est.index(l)).collect::<Result<Vec<_>, _>>();
    let (xi, yi, zi) = (idx(x)?, idx(y)?, idx(z)?);
    let overlap = |a: &[usize], b: &[usize]| a.iter().any(|i| b.contains(i));
    if xi.is_empty() || yi.is_empty() || overlap(&xi, &yi) || overlap(&xi, &zi) || overlap(&yi, &zi) {
        return Err(SimulateError::BadSets);
    }
    let rows: Vec<usize> = xi.iter().chain(&yi).copied().collect();
    let mut worst = 0.0f64;
    for (theta, m) in est.frequencies.iter().zip(&est.matrices) {
        let mut cond = block(m, &rows, &rows);
        if !zi.is_empty() {
            let szz = block(m, &zi, &zi);
            let eig = szz.clone().symmetric_eigenvalues();
            let (lo, hi) = (eig.min(), eig.max());
            let c = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            if c > MAX_CONDITION {
                return Err(SimulateError::IllConditioned { theta: *theta, cond: c });
            }
            let chol = szz.cholesky().ok_or(SimulateError::IllConditioned { theta: *theta, cond: f64::INFINITY })?;
            let srz = block(m, &rows, &zi);
            cond -= &srz * chol.solve(&srz.adjoint());
            // a variable (almost) determined by Z makes the joint block singular
            for i in 0..rows.len() {
                let (raw, rest) = (m[(rows[i], rows[i])].re, cond[(i, i)].re);
                if rest <= raw / MAX_CONDITION {
                    return Err(SimulateError::IllConditioned { theta: *theta, cond: raw / rest.max(0.0) });
                }
            }
        }
        let nx = xi.len();
        for a in 0..nx {
            for b in nx..rows.len() {
                let denom = (cond[(a, a)].re * cond[(b, b)].re).sqrt();
                let r = if denom > 0.0 { cond[(a, b)].norm() / denom } else { 0.0 };
                worst = worst.max(r);
            }
        }
    }
    Ok(worst)
}

/// Declares `X` independent of `Y` given `Z` when [`partial_coherence`] is
/// below `threshold`. The threshold is a fixed cut-off, not a calibrated test.
pub fn empirical_ci_test(
    est: &SpectrumEstimate,
    x: &[&str],
    y: &[&str],
    z: &[&str],
    threshold: f64,
) -> Result<bool, SimulateError> {
    Ok(partial_coherence(est, x, y, z)? < threshold)
}
