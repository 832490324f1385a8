use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SvarParams;
use crate::graph::TimeSeriesGraph;
use crate::Rational;

/// Default numerator bound: coefficients start as `n/64` with `0 < |n| <= 64`.
pub const DEFAULT_MAGNITUDE: u32 = 64;

const DENOM: i64 = 64;

fn margin_cap() -> Rational {
    Rational::new(9.into(), 10.into())
}

/// Rescales `coeffs` so their absolute values sum to at most 9/10.
fn cap<'a>(coeffs: impl Iterator<Item = &'a mut Rational>) {
    let mut coeffs: Vec<&mut Rational> = coeffs.collect();
    let total: Rational = coeffs.iter().map(|c| c.abs()).sum();
    if total > margin_cap() {
        let f = margin_cap() / total;
        for c in coeffs.iter_mut() {
            **c = &**c * &f;
        }
    }
}

/// Random stable parameters, deterministic in `seed`.
///
/// Every coefficient is `n/64` with `n` uniform on the nonzero integers in
/// `[-magnitude_bound, magnitude_bound]`. Each vertex's auto coefficients,
/// and the observed cross coefficients when the observed graph is cyclic, are
/// then scaled down so their absolute sums are at most 9/10. Noise variances
/// are `n/16` with `n` uniform on `1..=64`.
pub fn sample_stable_params(tsg: &TimeSeriesGraph, seed: u64, magnitude_bound: u32) -> SvarParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = magnitude_bound.max(1) as i64;
    let draw = |rng: &mut ChaCha8Rng| {
        let mut n = rng.random_range(-m..m);
        if n >= 0 {
            n += 1;
        }
        Rational::new(n.into(), DENOM.into())
    };
    let g = tsg.graph();
    let mut cross: BTreeMap<_, _> = tsg
        .cross_lags()
        .iter()
        .flat_map(|(&e, lags)| lags.iter().map(move |&k| (e, k)))
        .map(|key| (key, draw(&mut rng)))
        .collect();
    let mut auto = BTreeMap::new();
    for v in 0..g.n() {
        let mut coeffs: Vec<(u32, Rational)> = tsg.auto_lags(v).iter().map(|&k| (k, draw(&mut rng))).collect();
        cap(coeffs.iter_mut().map(|(_, c)| c));
        auto.extend(coeffs.into_iter().map(|(k, c)| ((v, k), c)));
    }
    if g.observed_cyclic() {
        cap(cross.iter_mut().filter(|(((u, _), _), _)| g.is_observed(*u)).map(|(_, c)| c));
    }
    let noise = (0..g.n()).map(|_| Rational::new(rng.random_range(1..=64i64).into(), 16.into())).collect();
    let p = SvarParams::new(tsg, cross, auto, noise).expect("sampled parameters satisfy the invariants");
    debug_assert!(p.cross_map().values().all(|c| !c.is_zero()));
    p
}
