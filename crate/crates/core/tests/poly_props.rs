use lojasiewicz::poly::{isolate_real_roots, parse, resultant, Polynomial};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

const NAMES: [&str; 3] = ["x1", "x2", "y"];

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn small_poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec(((0u32..3, 0u32..3, 0u32..3), -5i64..6, 1i64..4), 0..6).prop_map(|terms| {
        Polynomial::from_terms(3, terms.into_iter().map(|((a, b, c), n, d)| (vec![a, b, c], q(n, d))))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_is_linear(p in small_poly(), r in small_poly(), a in -4i64..5, b in -4i64..5, v in 0usize..3) {
        let (a, b) = (q(a, 1), q(b, 1));
        let lhs = (&p.scale(&a) + &r.scale(&b)).partial(v).unwrap();
        let rhs = &p.partial(v).unwrap().scale(&a) + &r.partial(v).unwrap().scale(&b);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn partial_obeys_leibniz(p in small_poly(), r in small_poly(), v in 0usize..3) {
        let lhs = (&p * &r).partial(v).unwrap();
        let rhs = &(&p.partial(v).unwrap() * &r) + &(&p * &r.partial(v).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn render_then_parse_is_identity(p in small_poly()) {
        let text = p.display_with(&NAMES);
        prop_assert_eq!(parse(&text, &NAMES).unwrap(), p);
    }

    #[test]
    fn resultant_vanishes_at_common_roots(
        s in small_poly(), t in small_poly(), u in small_poly(), w in small_poly(),
        a in -3i64..4, b in -3i64..4, c in -3i64..4,
    ) {
        // p and r both vanish at (a, b, c).
        let shift = |i: usize, k: i64| &Polynomial::var(3, i) - &Polynomial::constant(3, q(k, 1));
        let p = &(&shift(0, a) * &s) + &(&shift(2, c) * &t);
        let r = &(&shift(1, b) * &u) + &(&shift(2, c) * &w);
        prop_assume!(p.degree_in(2).finite().unwrap_or(0) > 0 && r.degree_in(2).finite().unwrap_or(0) > 0);
        let res = resultant(&p, &r, 2).unwrap();
        prop_assert!(res.eval_exact(&[q(a, 1), q(b, 1), q(c, 1)]) == BigRational::from_integer(0.into()));
    }

    #[test]
    fn sturm_isolation_finds_known_roots(mut roots in prop::collection::btree_set((-40i64..41, 1i64..5), 1..6)) {
        let mut vals: Vec<BigRational> = std::mem::take(&mut roots).into_iter().map(|(n, d)| q(n, d)).collect();
        vals.sort();
        vals.dedup();
        let x = Polynomial::var(1, 0);
        let p = vals.iter().fold(Polynomial::one(1), |acc, r| &acc * &(&x - &Polynomial::constant(1, r.clone())));
        let found = isolate_real_roots(&p, -100.0, 100.0, 1e-12).unwrap();
        prop_assert_eq!(found.len(), vals.len());
        for (iv, r) in found.iter().zip(&vals) {
            prop_assert!(iv.lo <= *r && *r <= iv.hi, "{} not in [{}, {}]", r, iv.lo, iv.hi);
        }
    }
}

#[test]
fn zero_polynomial_has_no_finite_degree() {
    assert_eq!(Polynomial::zero(2).total_degree().finite(), None);
    assert_eq!(parse("x1 - x1", &NAMES).unwrap().total_degree().finite(), None);
    assert_eq!(parse("3", &NAMES).unwrap().total_degree().finite(), Some(0));
}
