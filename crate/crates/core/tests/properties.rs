use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spectral_svar::graph::generate::{random_process_graph, random_time_series_graph};
use spectral_svar::graph::{d_separated, trek_sides};
use spectral_svar::ratfield::{format_rational, parse_rational};
use spectral_svar::svar::{observed_spectrum, sample_stable_params, DEFAULT_MAGNITUDE};
use spectral_svar::{Poly, RatFn, RatMatrix, Rational, VertexSet};

fn poly(max_deg: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((-9i64..=9, 1i64..=5), 0..=max_deg + 1)
        .prop_map(|c| Poly::from_coeffs(c.into_iter().map(|(n, d)| Rational::new(n.into(), d.into())).collect()))
}

fn ratfn() -> impl Strategy<Value = RatFn> {
    (poly(3), poly(3).prop_filter("nonzero denominator", |p| !p.is_zero()))
        .prop_map(|(n, d)| RatFn::new(n, d).unwrap())
}

fn nonzero_ratfn() -> impl Strategy<Value = RatFn> {
    ratfn().prop_filter("nonzero", |r| !r.is_zero())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conjugation_is_an_involutive_field_automorphism(r in ratfn(), s in ratfn()) {
        prop_assert_eq!(r.conj().conj(), r.clone());
        prop_assert_eq!((&r * &s).conj(), &r.conj() * &s.conj());
        prop_assert_eq!((&r + &s).conj(), &r.conj() + &s.conj());
    }

    #[test]
    fn field_axioms(r in ratfn(), s in ratfn(), t in nonzero_ratfn()) {
        prop_assert_eq!(&(&r + &s) - &s, r.clone());
        prop_assert_eq!(&r * &(&s + &t), &(&r * &s) + &(&r * &t));
        prop_assert!((&t * &t.inv().unwrap()).is_one());
        prop_assert_eq!((&r * &t).checked_div(&t).unwrap(), r);
    }

    #[test]
    fn canonical_form_is_unique(r in ratfn(), c in 1i64..7) {
        let k = Poly::from_ints(&[c, 1]);
        let scaled = RatFn::new(r.num() * &k, r.den() * &k).unwrap();
        prop_assert_eq!(scaled, r.clone());
        if !r.is_zero() {
            prop_assert!(r.den().leading_coeff().unwrap() == &Rational::from_integer(1.into()));
        }
    }

    #[test]
    fn conjugate_evaluates_at_inverse_point(r in ratfn(), theta in 0.0f64..std::f64::consts::TAU) {
        let z = Complex64::from_polar(1.0, theta);
        if let (Ok(a), Ok(b)) = (r.conj().eval_complex(z), r.eval_complex(z.conj())) {
            prop_assert!((a - b).norm() <= 1e-9 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn division_with_remainder(a in poly(5), d in poly(3).prop_filter("nonzero", |p| !p.is_zero())) {
        let (q, r) = a.div_rem(&d).unwrap();
        prop_assert_eq!(&(&q * &d) + &r, a);
        prop_assert!(r.is_zero() || r.degree() < d.degree());
    }

    #[test]
    fn gcd_divides_both(a in poly(3), b in poly(3), c in poly(2)) {
        let (a, b) = (&a * &c, &b * &c);
        if a.is_zero() && b.is_zero() {
            prop_assert!(a.gcd(&b).is_err());
        } else {
            let g = a.gcd(&b).unwrap();
            prop_assert!(a.div_rem(&g).unwrap().1.is_zero());
            prop_assert!(b.div_rem(&g).unwrap().1.is_zero());
            if !c.is_zero() {
                prop_assert!(g.div_rem(&c.monic()).unwrap().1.is_zero());
            }
        }
    }

    #[test]
    fn rational_text_round_trip(n in -1000i64..1000, d in 1i64..1000) {
        let q = Rational::new(n.into(), d.into());
        prop_assert_eq!(parse_rational(&format_rational(&q)).unwrap(), q);
    }

    #[test]
    fn ratfn_json_round_trip(r in ratfn()) {
        let s = serde_json::to_string(&r).unwrap();
        let back: RatFn = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn determinant_is_multiplicative(e in prop::collection::vec(ratfn(), 8)) {
        let a = RatMatrix::from_rows(vec![e[0..2].to_vec(), e[2..4].to_vec()]).unwrap();
        let b = RatMatrix::from_rows(vec![e[4..6].to_vec(), e[6..8].to_vec()]).unwrap();
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(ab.det().unwrap(), &a.det().unwrap() * &b.det().unwrap());
        prop_assert_eq!(a.transpose().det().unwrap(), a.det().unwrap());
    }

    #[test]
    fn degrees_add_and_conjugation_multiplies(a in poly(4), b in poly(4)) {
        let ab = &a * &b;
        if !a.is_zero() && !b.is_zero() {
            prop_assert_eq!(ab.degree(), Some(a.degree().unwrap() + b.degree().unwrap()));
        }
        prop_assert_eq!(ab.conj(), &a.conj() * &b.conj());
    }

    #[test]
    fn conjugate_determinant(e in prop::collection::vec(ratfn(), 9)) {
        let a = RatMatrix::from_rows(vec![e[0..3].to_vec(), e[3..6].to_vec(), e[6..9].to_vec()]).unwrap();
        prop_assert_eq!(a.conj().det().unwrap(), a.det().unwrap().conj());
        prop_assert_eq!(a.conj().conj(), a);
    }

    #[test]
    fn rank_matches_evaluated_rank(e in prop::collection::vec(ratfn(), 3), k in 0usize..3, seed in 0u64..1000) {
        // rows 3 and 4 are combinations of rows 1 and 2, up to k of them kept
        let r0 = vec![e[0].clone(), e[1].clone(), RatFn::one()];
        let r1 = vec![e[2].clone(), RatFn::z(), e[0].clone()];
        let mix: Vec<RatFn> = r0.iter().zip(&r1).map(|(a, b)| &(a * &e[1]) + b).collect();
        let rows = [r0, r1, mix].into_iter().take(k + 1).collect();
        let m = RatMatrix::from_rows(rows).unwrap();
        prop_assert_eq!(m.rank(), m.rank_eval(seed));
    }

    #[test]
    fn submatrix_of_submatrix(e in prop::collection::vec(ratfn(), 9), rs in prop::sample::subsequence(vec!["a", "b", "c"], 0..=3), cs in prop::sample::subsequence(vec!["a", "b", "c"], 0..=3)) {
        let labels: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let m = RatMatrix::new(labels.clone(), labels.clone(), vec![e[0..3].to_vec(), e[3..6].to_vec(), e[6..9].to_vec()]).unwrap();
        let outer = m.submatrix(&["a", "c"], &["b", "c"]).unwrap();
        let r: Vec<&str> = rs.iter().copied().filter(|l| ["a", "c"].contains(l)).collect();
        let c: Vec<&str> = cs.iter().copied().filter(|l| ["b", "c"].contains(l)).collect();
        prop_assert_eq!(outer.submatrix(&r, &c).unwrap(), m.submatrix(&r, &c).unwrap());
        prop_assert_eq!(m.submatrix(&labels, &labels).unwrap(), m);
    }

    #[test]
    fn solve_has_zero_residual(e in prop::collection::vec(ratfn(), 12)) {
        let a = RatMatrix::from_rows(vec![e[0..3].to_vec(), e[3..6].to_vec(), e[6..9].to_vec()]).unwrap();
        let b = e[9..12].to_vec();
        match a.solve(&b) {
            Ok(x) => {
                for i in 0..3 {
                    let lhs = (0..3).fold(RatFn::zero(), |acc, j| &acc + &(a.get(i, j) * &x[j]));
                    prop_assert_eq!(&lhs, &b[i]);
                }
            }
            Err(_) => prop_assert!(a.det().unwrap().is_zero()),
        }
    }

    #[test]
    fn inverse_is_two_sided(e in prop::collection::vec(ratfn(), 9)) {
        let a = RatMatrix::from_rows(vec![e[0..3].to_vec(), e[3..6].to_vec(), e[6..9].to_vec()]).unwrap();
        if let Ok(inv) = a.inverse() {
            let id = RatMatrix::identity(a.row_labels().to_vec()).unwrap();
            prop_assert_eq!(a.mul(&inv).unwrap().relabel(id.row_labels().to_vec(), id.col_labels().to_vec()).unwrap(), id.clone());
            prop_assert_eq!(inv.mul(&a).unwrap().relabel(id.row_labels().to_vec(), id.col_labels().to_vec()).unwrap(), id);
        } else {
            prop_assert!(a.det().unwrap().is_zero());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn spectrum_is_conjugate_symmetric(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_process_graph(&mut rng, 4, 1, 0.4);
        let tsg = random_time_series_graph(&mut rng, g, 1);
        let p = sample_stable_params(&tsg, seed, DEFAULT_MAGNITUDE);
        let s = observed_spectrum(&tsg, &p).unwrap();
        prop_assert_eq!(s.transpose(), s.conj());
    }

    #[test]
    fn dsep_is_symmetric_and_matches_trek_free_marginals(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_process_graph(&mut rng, 5, 0, 0.4);
        for a in 0..5 {
            for b in a + 1..5 {
                let (x, y) = (VertexSet::singleton(a), VertexSet::singleton(b));
                for z in VertexSet::range(5).without(a).without(b).subsets() {
                    prop_assert_eq!(d_separated(&g, x, y, z).unwrap(), d_separated(&g, y, x, z).unwrap());
                }
                // marginal independence holds exactly when no trek joins a and b
                let no_trek = trek_sides(&g, x, y).unwrap().is_empty();
                prop_assert_eq!(d_separated(&g, x, y, VertexSet::EMPTY).unwrap(), no_trek);
            }
        }
    }
}
