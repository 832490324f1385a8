use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_svar::graph::generate::{random_process_graph, random_time_series_graph};
use spectral_svar::identify::spectral_oracle;
use spectral_svar::simulate::*;
use spectral_svar::svar::{observed_spectrum, sample_stable_params, SvarParams};
use spectral_svar::{ProcessGraph, Rational, TimeSeriesGraph, VertexSet};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn freqs(k: usize) -> Vec<f64> {
    (0..k).map(|j| PI * (j as f64 + 0.5) / k as f64).collect()
}

/// Chain a -> b -> c at lag 1 with noise variances 1, `w`, `w`.
fn chain(w: Rational) -> (TimeSeriesGraph, SvarParams) {
    let g = ProcessGraph::observed_only(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
    let tsg = TimeSeriesGraph::uniform(g, &[1], &[1]).unwrap();
    let p = SvarParams::new(
        &tsg,
        BTreeMap::from([(((0, 1), 1), q(4, 5)), (((1, 2), 1), q(4, 5))]),
        BTreeMap::from([((0, 1), q(1, 2)), ((1, 1), q(1, 2)), ((2, 1), q(1, 2))]),
        vec![q(1, 1), w.clone(), w],
    )
    .unwrap();
    (tsg, p)
}

#[test]
fn white_noise_variance() {
    let g = ProcessGraph::observed_only(&["a", "b"], &[("a", "b")]).unwrap();
    let tsg = TimeSeriesGraph::uniform(g, &[0], &[1]).unwrap();
    let p = SvarParams::new(
        &tsg,
        BTreeMap::from([(((0, 1), 0), q(0, 1))]),
        BTreeMap::from([((0, 1), q(0, 1)), ((1, 1), q(0, 1))]),
        vec![q(1, 1), q(5, 2)],
    )
    .unwrap();
    let s = simulate_series(&tsg, &p, 100_000, 0, 17).unwrap();
    for (j, omega) in [(0, 1.0), (1, 2.5)] {
        let var = s.column(j).iter().map(|x| x * x).sum::<f64>() / s.len() as f64;
        assert!((var / omega - 1.0).abs() < 0.05, "variance {var} vs {omega}");
    }
}

#[test]
fn ar1_autocorrelation() {
    let g = ProcessGraph::observed_only(&["x"], &[] as &[(&str, &str)]).unwrap();
    let tsg = TimeSeriesGraph::uniform(g, &[], &[1]).unwrap();
    let p = SvarParams::new(&tsg, BTreeMap::new(), BTreeMap::from([((0, 1), q(1, 2))]), vec![q(1, 1)]).unwrap();
    let x = simulate_series(&tsg, &p, 100_000, 1000, 3).unwrap().column(0);
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let c0: f64 = x.iter().map(|a| (a - m) * (a - m)).sum();
    let c1: f64 = x.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    assert!((c1 / c0 - 0.5).abs() < 0.02, "autocorrelation {}", c1 / c0);
}

#[test]
fn white_noise_spectrum_is_flat() {
    let g = ProcessGraph::observed_only(&["a"], &[] as &[(&str, &str)]).unwrap();
    let tsg = TimeSeriesGraph::uniform(g, &[], &[]).unwrap();
    let p = SvarParams::new(&tsg, BTreeMap::new(), BTreeMap::new(), vec![q(1, 1)]).unwrap();
    let s = simulate_series(&tsg, &p, 1 << 16, 0, 5).unwrap();
    let est = estimate_spectrum(&s, &freqs(8), 256, 0.5).unwrap();
    for m in &est.matrices {
        assert!((m[(0, 0)].re - 1.0).abs() < 0.1, "{}", m[(0, 0)]);
    }
}

#[test]
fn welch_spread_matches_segment_count() {
    // 50% overlapped Hann segments: variance of the estimate is close to
    // S^2 / (0.95 K) for K segments.
    let g = ProcessGraph::observed_only(&["a"], &[] as &[(&str, &str)]).unwrap();
    let tsg = TimeSeriesGraph::uniform(g, &[], &[]).unwrap();
    let p = SvarParams::new(&tsg, BTreeMap::new(), BTreeMap::new(), vec![q(1, 1)]).unwrap();
    let mut dev = Vec::new();
    for seed in 0..8 {
        let s = simulate_series(&tsg, &p, 1 << 16, 0, seed).unwrap();
        let est = estimate_spectrum(&s, &freqs(16), 256, 0.5).unwrap();
        dev.extend(est.matrices.iter().map(|m| m[(0, 0)].re - 1.0));
        if seed == 0 {
            assert_eq!(est.segments, 511);
        }
    }
    let sd = (dev.iter().map(|x| x * x).sum::<f64>() / dev.len() as f64).sqrt();
    let theory = 1.0 / (0.95f64 * 511.0).sqrt();
    assert!((sd / theory - 1.0).abs() < 0.15, "sd {sd} vs {theory}");
}

#[test]
fn chain_estimate_tracks_exact_spectrum() {
    // small noise on b and c keeps every pair highly coherent, so cross
    // entries have small relative estimation error
    let (tsg, p) = chain(q(1, 64));
    let exact = observed_spectrum(&tsg, &p).unwrap();
    let s = simulate_series(&tsg, &p, 1 << 16, 500, 1).unwrap();
    let est = estimate_spectrum(&s, &freqs(8), 128, 0.5).unwrap();
    for (theta, m) in est.frequencies.iter().zip(&est.matrices) {
        let e = evaluate_spectrum(&exact, *theta).unwrap();
        assert!((m - m.adjoint()).norm() < 1e-8);
        let eig = m.clone().symmetric_eigenvalues();
        assert!(eig.min() > -1e-8);
        for i in 0..3 {
            for j in 0..3 {
                let rel = (m[(i, j)] - e[(i, j)]).norm() / e[(i, j)].norm();
                assert!(rel < 0.15, "theta {theta} entry ({i},{j}) relative error {rel}");
            }
        }
    }
}

#[test]
fn chain_ci_tests() {
    let (tsg, p) = chain(q(1, 1));
    let s = simulate_series(&tsg, &p, 1 << 16, 500, 2).unwrap();
    let est = estimate_spectrum(&s, &freqs(8), 256, 0.5).unwrap();
    assert!(empirical_ci_test(&est, &["a"], &["c"], &["b"], 0.1).unwrap());
    assert!(!empirical_ci_test(&est, &["a"], &["b"], &[], 0.1).unwrap());
    assert!(!empirical_ci_test(&est, &["a"], &["c"], &[], 0.1).unwrap());
}

#[test]
fn ill_conditioned_block_is_reported() {
    let s = SeriesSample::new(
        vec!["a".into(), "b".into(), "c".into()],
        (0..512).map(|t| {
            let x = ((t * 7919) % 101) as f64 - 50.0;
            let y = ((t * 104729) % 37) as f64 - 18.0;
            vec![x, y, 2.0 * y]
        })
        .collect(),
    )
    .unwrap();
    let est = estimate_spectrum(&s, &[1.0], 64, 0.5).unwrap();
    assert!(matches!(
        partial_coherence(&est, &["a"], &["b"], &["b"]),
        Err(SimulateError::BadSets)
    ));
    // c = 2b, so b is determined by c
    assert!(matches!(
        partial_coherence(&est, &["a"], &["b"], &["c"]),
        Err(SimulateError::IllConditioned { .. })
    ));
    assert!(partial_coherence(&est, &["b"], &["c"], &["a"]).is_ok());
    let dup = SeriesSample::new(
        vec!["a".into(), "b".into(), "c".into(), "d".into()],
        s.values.iter().map(|r| vec![r[0], r[1], r[2], r[1]]).collect(),
    )
    .unwrap();
    let est = estimate_spectrum(&dup, &[1.0], 64, 0.5).unwrap();
    assert!(matches!(
        partial_coherence(&est, &["a"], &["b"], &["c", "d"]),
        Err(SimulateError::IllConditioned { .. })
    ));
}

#[test]
fn empirical_oracle_agrees_with_exact_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (mut agree, mut total) = (0, 0);
    for i in 0..20 {
        let g = random_process_graph(&mut rng, 4, 0, 0.5);
        let tsg = random_time_series_graph(&mut rng, g, 1);
        let p = sample_stable_params(&tsg, 900 + i, 64);
        let exact = observed_spectrum(&tsg, &p).unwrap();
        let s = simulate_series(&tsg, &p, 1 << 16, 500, i).unwrap();
        let est = estimate_spectrum(&s, &freqs(8), 256, 0.5).unwrap();
        let mut oracle = spectral_oracle(&exact);
        let labels = tsg.graph().labels().to_vec();
        for a in 0..4 {
            for b in a + 1..4 {
                for z in VertexSet::range(4).without(a).without(b).subsets() {
                    let zl: Vec<&str> = z.iter().map(|v| labels[v].as_str()).collect();
                    let truth = oracle(&[a], &[b], &z.to_vec());
                    let got = empirical_ci_test(&est, &[&labels[a]], &[&labels[b]], &zl, 0.1).unwrap();
                    agree += (truth == got) as usize;
                    total += 1;
                }
            }
        }
    }
    let rate = agree as f64 / total as f64;
    assert!(rate >= 0.9, "agreement {agree}/{total}");
}
