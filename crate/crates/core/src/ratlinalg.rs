//! Exact linear algebra over Q(z).
//!
//! Elimination clears the denominators of each row first and then runs
//! fraction-free (Bareiss) elimination on polynomial entries, which keeps
//! intermediate degrees bounded by the size of the minors involved.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ratfield::{Poly, RatFn, Rational};
use num_traits::Zero;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular over Q(z)")]
    Singular,
}

/// Dense matrix of rational functions with labelled rows and columns.
#[derive(Clone, PartialEq, Eq, Serialize)]
pub struct RatMatrix {
    rows: Vec<String>,
    cols: Vec<String>,
    entries: Vec<Vec<RatFn>>,
}

impl<'de> Deserialize<'de> for RatMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            rows: Vec<String>,
            cols: Vec<String>,
            entries: Vec<Vec<RatFn>>,
        }
        let raw = Raw::deserialize(d)?;
        RatMatrix::new(raw.rows, raw.cols, raw.entries).map_err(serde::de::Error::custom)
    }
}

fn check_distinct(labels: &[String]) -> Result<(), LinalgError> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(LinalgError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn index_labels(n: usize, prefix: &str) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl RatMatrix {
    pub fn new(rows: Vec<String>, cols: Vec<String>, entries: Vec<Vec<RatFn>>) -> Result<Self, LinalgError> {
        check_distinct(&rows)?;
        check_distinct(&cols)?;
        if entries.len() != rows.len() || entries.iter().any(|r| r.len() != cols.len()) {
            return Err(LinalgError::Shape(format!(
                "expected {}x{} entries",
                rows.len(),
                cols.len()
            )));
        }
        Ok(RatMatrix { rows, cols, entries })
    }

    /// Matrix with generated labels `r0, r1, ...` and `c0, c1, ...`.
    pub fn from_rows(entries: Vec<Vec<RatFn>>) -> Result<Self, LinalgError> {
        let m = entries.len();
        let n = entries.first().map_or(0, |r| r.len());
        RatMatrix::new(index_labels(m, "r"), index_labels(n, "c"), entries)
    }

    pub fn zeros(rows: Vec<String>, cols: Vec<String>) -> Result<Self, LinalgError> {
        let entries = vec![vec![RatFn::zero(); cols.len()]; rows.len()];
        RatMatrix::new(rows, cols, entries)
    }

    pub fn identity(labels: Vec<String>) -> Result<Self, LinalgError> {
        let mut m = RatMatrix::zeros(labels.clone(), labels)?;
        for i in 0..m.nrows() {
            m.entries[i][i] = RatFn::one();
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.rows
    }

    pub fn col_labels(&self) -> &[String] {
        &self.cols
    }

    pub fn entries(&self) -> &[Vec<RatFn>] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &RatFn {
        &self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: RatFn) {
        self.entries[i][j] = v;
    }

    pub fn row_index(&self, label: &str) -> Result<usize, LinalgError> {
        self.rows
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| LinalgError::UnknownLabel(label.to_string()))
    }

    pub fn col_index(&self, label: &str) -> Result<usize, LinalgError> {
        self.cols
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| LinalgError::UnknownLabel(label.to_string()))
    }

    /// Entry by row and column label.
    pub fn entry(&self, row: &str, col: &str) -> Result<&RatFn, LinalgError> {
        Ok(&self.entries[self.row_index(row)?][self.col_index(col)?])
    }

    /// `[M]_{X,Y}` in the order the labels are given.
    pub fn submatrix<S: AsRef<str>>(&self, x: &[S], y: &[S]) -> Result<RatMatrix, LinalgError> {
        let ri = x.iter().map(|l| self.row_index(l.as_ref())).collect::<Result<Vec<_>, _>>()?;
        let ci = y.iter().map(|l| self.col_index(l.as_ref())).collect::<Result<Vec<_>, _>>()?;
        Ok(self.submatrix_idx(&ri, &ci))
    }

    pub fn submatrix_idx(&self, ri: &[usize], ci: &[usize]) -> RatMatrix {
        RatMatrix {
            rows: ri.iter().map(|&i| self.rows[i].clone()).collect(),
            cols: ci.iter().map(|&j| self.cols[j].clone()).collect(),
            entries: ri
                .iter()
                .map(|&i| ci.iter().map(|&j| self.entries[i][j].clone()).collect())
                .collect(),
        }
    }

    pub fn transpose(&self) -> RatMatrix {
        let entries = (0..self.ncols())
            .map(|j| (0..self.nrows()).map(|i| self.entries[i][j].clone()).collect())
            .collect();
        RatMatrix { rows: self.cols.clone(), cols: self.rows.clone(), entries }
    }

    /// Entrywise conjugation.
    pub fn conj(&self) -> RatMatrix {
        self.map(RatFn::conj)
    }

    pub fn map(&self, f: impl Fn(&RatFn) -> RatFn) -> RatMatrix {
        RatMatrix {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            entries: self.entries.iter().map(|r| r.iter().map(&f).collect()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(RatFn::is_zero)
    }

    pub fn mul(&self, rhs: &RatMatrix) -> Result<RatMatrix, LinalgError> {
        if self.ncols() != rhs.nrows() {
            return Err(LinalgError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.nrows(),
                self.ncols(),
                rhs.nrows(),
                rhs.ncols()
            )));
        }
        let entries = (0..self.nrows())
            .map(|i| {
                (0..rhs.ncols())
                    .map(|j| {
                        (0..self.ncols())
                            .filter(|&k| !self.entries[i][k].is_zero() && !rhs.entries[k][j].is_zero())
                            .map(|k| &self.entries[i][k] * &rhs.entries[k][j])
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Ok(RatMatrix { rows: self.rows.clone(), cols: rhs.cols.clone(), entries })
    }

    fn zip(&self, rhs: &RatMatrix, f: impl Fn(&RatFn, &RatFn) -> RatFn) -> Result<RatMatrix, LinalgError> {
        if self.nrows() != rhs.nrows() || self.ncols() != rhs.ncols() {
            return Err(LinalgError::Shape("entrywise operation on different shapes".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(x, y)).collect())
            .collect();
        Ok(RatMatrix { rows: self.rows.clone(), cols: self.cols.clone(), entries })
    }

    pub fn add(&self, rhs: &RatMatrix) -> Result<RatMatrix, LinalgError> {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &RatMatrix) -> Result<RatMatrix, LinalgError> {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn det(&self) -> Result<RatFn, LinalgError> {
        let n = self.nrows();
        if n != self.ncols() {
            return Err(LinalgError::NotSquare { rows: n, cols: self.ncols() });
        }
        if n == 0 {
            return Ok(RatFn::one());
        }
        let (mut rows, mults) = clear_denominators(&self.entries);
        let e = bareiss(&mut rows, n);
        if e.rank < n {
            return Ok(RatFn::zero());
        }
        let mut d = rows[n - 1][n - 1].clone();
        if e.negate {
            d = -d;
        }
        let den = mults.iter().fold(Poly::one(), |acc, m| &acc * m);
        Ok(RatFn::new(d, den).expect("nonzero row multipliers"))
    }

    pub fn rank(&self) -> usize {
        if self.nrows() == 0 || self.ncols() == 0 {
            return 0;
        }
        let (mut rows, _) = clear_denominators(&self.entries);
        bareiss(&mut rows, self.ncols()).rank
    }

    /// Rank after substituting a random rational for `z`.
    ///
    /// Never exceeds [`RatMatrix::rank`], and agrees with it unless the point
    /// is a root of one of finitely many nonzero minors.
    pub fn rank_eval(&self, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let num: i64 = rng.random_range(-1000..=1000);
            let den: i64 = rng.random_range(1..=997);
            let x = Rational::new(num.into(), den.into());
            let vals: Option<Vec<Vec<Rational>>> = self
                .entries
                .iter()
                .map(|r| r.iter().map(|e| e.eval_rational(&x).ok()).collect())
                .collect();
            if let Some(vals) = vals {
                return rational_rank(vals);
            }
        }
    }

    /// Solves `M X = B` for square nonsingular `M`.
    pub fn solve_matrix(&self, b: &RatMatrix) -> Result<RatMatrix, LinalgError> {
        let n = self.nrows();
        if n != self.ncols() {
            return Err(LinalgError::NotSquare { rows: n, cols: self.ncols() });
        }
        if b.nrows() != n {
            return Err(LinalgError::Shape(format!("right-hand side has {} rows, expected {n}", b.nrows())));
        }
        let k = b.ncols();
        let aug: Vec<Vec<RatFn>> = self
            .entries
            .iter()
            .zip(&b.entries)
            .map(|(a, r)| a.iter().chain(r).cloned().collect())
            .collect();
        let (mut rows, _) = clear_denominators(&aug);
        let e = bareiss(&mut rows, n);
        if e.rank < n {
            return Err(LinalgError::Singular);
        }
        let mut x = vec![vec![RatFn::zero(); k]; n];
        for i in (0..n).rev() {
            let piv = RatFn::from_poly(rows[i][i].clone());
            for c in 0..k {
                let mut acc = RatFn::from_poly(rows[i][n + c].clone());
                for j in i + 1..n {
                    if !rows[i][j].is_zero() && !x[j][c].is_zero() {
                        acc = &acc - &(&RatFn::from_poly(rows[i][j].clone()) * &x[j][c]);
                    }
                }
                x[i][c] = acc.checked_div(&piv).expect("nonzero pivot");
            }
        }
        Ok(RatMatrix { rows: self.cols.clone(), cols: b.cols.clone(), entries: x })
    }

    /// Solves `M x = b` for a single column.
    pub fn solve(&self, b: &[RatFn]) -> Result<Vec<RatFn>, LinalgError> {
        let bm = RatMatrix::new(
            self.rows.clone(),
            vec!["rhs".to_string()],
            b.iter().map(|v| vec![v.clone()]).collect(),
        )
        .map_err(|_| LinalgError::Shape(format!("right-hand side has {} entries, expected {}", b.len(), self.nrows())))?;
        Ok(self.solve_matrix(&bm)?.entries.into_iter().map(|mut r| r.remove(0)).collect())
    }

    pub fn inverse(&self) -> Result<RatMatrix, LinalgError> {
        let id = RatMatrix::identity(self.rows.clone())?;
        let mut inv = self.solve_matrix(&id)?;
        inv.cols = self.rows.clone();
        Ok(inv)
    }

    /// Relabels rows and columns (lengths must match).
    pub fn relabel(mut self, rows: Vec<String>, cols: Vec<String>) -> Result<RatMatrix, LinalgError> {
        if rows.len() != self.nrows() || cols.len() != self.ncols() {
            return Err(LinalgError::Shape("label count mismatch".into()));
        }
        check_distinct(&rows)?;
        check_distinct(&cols)?;
        self.rows = rows;
        self.cols = cols;
        Ok(self)
    }
}

impl std::fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "RatMatrix {:?} x {:?}", self.rows, self.cols)?;
        for (l, r) in self.rows.iter().zip(&self.entries) {
            writeln!(f, "  {l}: {:?}", r)?;
        }
        Ok(())
    }
}

/// Scales each row by the monic lcm of its denominators; returns the
/// polynomial rows and the multipliers.
fn clear_denominators(entries: &[Vec<RatFn>]) -> (Vec<Vec<Poly>>, Vec<Poly>) {
    let mut rows = Vec::with_capacity(entries.len());
    let mut mults = Vec::with_capacity(entries.len());
    for r in entries {
        let mut l = Poly::one();
        for e in r {
            if e.is_zero() || e.den().is_one() {
                continue;
            }
            let g = l.gcd(e.den()).expect("nonzero");
            l = &l * &e.den().exact_div(&g).expect("gcd divides");
        }
        let prow = r
            .iter()
            .map(|e| {
                if e.is_zero() {
                    Poly::zero()
                } else {
                    e.num() * &l.exact_div(e.den()).expect("lcm is a multiple")
                }
            })
            .collect();
        rows.push(prow);
        mults.push(l);
    }
    (rows, mults)
}

struct Echelon {
    rank: usize,
    negate: bool,
}

/// In-place fraction-free row echelon form, pivoting only in the first
/// `pivot_cols` columns. After the call, `rows[i][i]` for `i < rank` holds the
/// pivots when the leading block is nonsingular, and the last pivot equals
/// the determinant of that block up to the returned sign.
fn bareiss(rows: &mut [Vec<Poly>], pivot_cols: usize) -> Echelon {
    let m = rows.len();
    let width = rows.first().map_or(0, |r| r.len());
    let mut prev = Poly::one();
    let mut r = 0;
    let mut negate = false;
    for c in 0..pivot_cols {
        if r == m {
            break;
        }
        let pick = (r..m)
            .filter(|&i| !rows[i][c].is_zero())
            .min_by_key(|&i| (rows[i][c].degree(), rows[i].iter().filter(|p| !p.is_zero()).count()));
        let Some(p) = pick else { continue };
        if p != r {
            rows.swap(p, r);
            negate = !negate;
        }
        let (top, rest) = rows.split_at_mut(r + 1);
        let pivot_row = &top[r];
        for row in rest.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            for j in c + 1..width {
                let mut v = &pivot_row[c] * &row[j];
                if !lead.is_zero() && !pivot_row[j].is_zero() {
                    v = &v - &(&lead * &pivot_row[j]);
                }
                row[j] = if prev.is_one() { v } else { v.exact_div(&prev).expect("Bareiss division is exact") };
            }
        }
        prev = rows[r][c].clone();
        r += 1;
    }
    Echelon { rank: r, negate }
}

/// Rank of a dense rational matrix by Gaussian elimination.
pub fn rational_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..n {
        if r == m {
            break;
        }
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(p, r);
        let inv = rows[r][c].recip();
        for i in r + 1..m {
            if rows[i][c].is_zero() {
                continue;
            }
            let f = &rows[i][c] * &inv;
            for j in c..n {
                let t = &f * &rows[r][j];
                rows[i][j] -= t;
            }
        }
        r += 1;
    }
    r
}

/// Determinant of a small square matrix by Laplace expansion; an
/// elimination-free oracle for tests.
pub fn det_laplace(m: &[Vec<RatFn>]) -> RatFn {
    let n = m.len();
    if n == 0 {
        return RatFn::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = RatFn::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<RatFn>> = m[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, v)| v.clone()).collect())
            .collect();
        let term = &m[0][j] * &det_laplace(&minor);
        acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}
