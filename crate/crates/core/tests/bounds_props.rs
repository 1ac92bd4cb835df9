use lojasiewicz::bounds::{
    best_rho, dist_exponents, prior_bound_comparison, r_bound, rho_bounds, s_bound, sufficiency_degree, Assumptions,
    DegreeBound, EntryKind,
};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

/// `base^exp` by repeated multiplication.
fn power(base: u64, exp: u32) -> BigUint {
    (0..exp).fold(BigUint::one(), |acc, _| acc * base)
}

fn assumptions() -> impl Strategy<Value = Assumptions> {
    (any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(a, b, c, d)| Assumptions {
        partial_y_nonzero: a,
        isolated_zero: b,
        polynomial_f: c,
        rational_f: d,
    })
}

#[test]
fn closed_forms_match_recomputation_on_the_grid() {
    for n in 1..=8u32 {
        for d in 2..=10u64 {
            let r = BigUint::from(2 * d * (2 * d - 1)).max(power(3 * d - 2, n) * d) + 1u32;
            assert_eq!(r_bound(n, d as u32).unwrap(), DegreeBound::Value(r), "R({n},{d})");
            assert_eq!(s_bound(n, d as u32).unwrap(), power(2 * d - 1, 3 * n + 1) * 2u32, "S({n},{d})");
            let prior = power(6 * d - 3, n + n * (n + 1) / 2 - 1) * d;
            let cmp = prior_bound_comparison(n, d as u32).unwrap();
            assert_eq!(cmp.prior_bound.to_rational(), BigRational::from_integer(prior.clone().into()));
            assert_eq!(cmp.sharper, power(2 * d - 1, 3 * n + 1) * 2u32 < prior);
        }
    }
}

#[test]
fn rho_bounds_have_the_form_one_minus_inverse() {
    let all = Assumptions { partial_y_nonzero: true, isolated_zero: true, polynomial_f: true, rational_f: false };
    for n in 1..=8 {
        for d in 2..=10 {
            for e in rho_bounds(n, d, &all).unwrap() {
                let b = e.value.to_rational();
                assert!(b >= BigRational::zero() && b < BigRational::one(), "{}: {b}", e.name);
                let inv = (BigRational::one() - &b).recip();
                assert!(inv.is_integer() && inv > BigRational::zero(), "{}: {b}", e.name);
            }
        }
    }
}

#[test]
fn degree_bounds_increase_in_n_and_d() {
    for n in 1..=8 {
        for d in 2..=10 {
            let r = |n, d| r_bound(n, d).unwrap().value().cloned().unwrap();
            if d < 10 {
                assert!(r(n, d) < r(n, d + 1));
                assert!(s_bound(n, d).unwrap() < s_bound(n, d + 1).unwrap());
            }
            if n < 8 {
                assert!(r(n, d) < r(n + 1, d), "R in n at ({n},{d})");
                assert!(s_bound(n, d).unwrap() < s_bound(n + 1, d).unwrap());
            }
        }
    }
}

#[test]
fn partial_y_bound_is_sharper_than_the_general_one() {
    let a = Assumptions { partial_y_nonzero: true, ..Default::default() };
    for n in 2..=8 {
        for d in 2..=10 {
            let e = rho_bounds(n, d, &a).unwrap();
            let get = |name: &str| e.iter().find(|x| x.name == name).unwrap().value.to_rational();
            assert!(get("theorem_2_1") < get("theorem_2_2"), "({n},{d})");
        }
    }
}

#[test]
fn new_bound_beats_the_prior_one_from_four_variables() {
    for n in 4..=8 {
        for d in 2..=6 {
            assert!(prior_bound_comparison(n, d).unwrap().sharper, "({n},{d})");
        }
    }
}

#[test]
fn linear_functions_have_exponent_zero() {
    let b = best_rho(3, 1, &Assumptions::default()).unwrap();
    assert!(b.value.to_rational().is_zero());
    assert_eq!(sufficiency_degree(3, 1, &Assumptions::default()).unwrap().k.to_string(), "1");
}

proptest! {
    #[test]
    fn exactly_one_best_and_it_is_minimal(n in 1u32..9, d in 2u32..11, a in assumptions()) {
        let e = rho_bounds(n, d, &a).unwrap();
        let best: Vec<_> = e.iter().filter(|x| x.best).collect();
        prop_assert_eq!(best.len(), 1);
        let min = e.iter().map(|x| x.value.to_rational()).min().unwrap();
        prop_assert_eq!(best[0].value.to_rational(), min);
    }

    #[test]
    fn derived_distance_exponent_inverts_rho(n in 1u32..6, d in 2u32..6, num in 0i64..50, den in 51i64..100) {
        let rho = BigRational::new(num.into(), den.into());
        let e = dist_exponents(n, d, &Assumptions::default(), Some(&rho)).unwrap();
        let l = e.iter().find(|x| x.name == "corollary_3_7").unwrap();
        prop_assert_eq!(l.kind, EntryKind::LojExponent);
        prop_assert_eq!(l.value.to_rational() * (BigRational::one() - rho), BigRational::one());
    }
}
