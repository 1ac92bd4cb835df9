//! Real root isolation by Sturm sequences and exact rational bisection.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{f64_to_rational, rational_to_f64, PolyError, Polynomial};

/// A closed interval `[lo, hi]` containing exactly one real root. `lo == hi`
/// when the root was hit exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RootInterval {
    pub fn lo_f64(&self) -> f64 {
        rational_to_f64(&self.lo)
    }

    pub fn hi_f64(&self) -> f64 {
        rational_to_f64(&self.hi)
    }

    pub fn midpoint(&self) -> f64 {
        rational_to_f64(&((&self.lo + &self.hi) / BigRational::from_integer(2.into())))
    }

    pub fn width(&self) -> f64 {
        rational_to_f64(&(&self.hi - &self.lo))
    }
}

type Dense = Vec<BigRational>;

fn trim(mut v: Dense) -> Dense {
    while v.len() > 1 && v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn horner(p: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn derivative(p: &[BigRational]) -> Dense {
    if p.len() <= 1 {
        return vec![BigRational::zero()];
    }
    p.iter().enumerate().skip(1).map(|(k, c)| c * BigRational::from_integer(k.into())).collect()
}

fn is_zero_poly(p: &[BigRational]) -> bool {
    p.iter().all(|c| c.is_zero())
}

/// Quotient and remainder of dense polynomials over Q.
fn divrem(a: &[BigRational], b: &[BigRational]) -> (Dense, Dense) {
    let b = trim(b.to_vec());
    let db = b.len() - 1;
    let mut r = trim(a.to_vec());
    if r.len() < b.len() {
        return (vec![BigRational::zero()], r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    let lb = b[db].clone();
    while r.len() > db && !is_zero_poly(&r) {
        let dr = r.len() - 1;
        let coef = &r[dr] / &lb;
        let shift = dr - db;
        for (k, bk) in b.iter().enumerate() {
            r[shift + k] = &r[shift + k] - &(&coef * bk);
        }
        q[shift] = coef;
        r.pop();
        r = trim(r);
        if r.len() <= db {
            break;
        }
    }
    (trim(q), trim(r))
}

fn gcd_dense(a: &[BigRational], b: &[BigRational]) -> Dense {
    let mut x = trim(a.to_vec());
    let mut y = trim(b.to_vec());
    while !is_zero_poly(&y) {
        let (_, r) = divrem(&x, &y);
        x = y;
        y = r;
    }
    x
}

fn sturm_sequence(p: &[BigRational]) -> Vec<Dense> {
    let mut seq = vec![p.to_vec(), derivative(p)];
    loop {
        let n = seq.len();
        if is_zero_poly(&seq[n - 1]) {
            seq.pop();
            break;
        }
        let (_, r) = divrem(&seq[n - 2], &seq[n - 1]);
        if is_zero_poly(&r) {
            break;
        }
        seq.push(r.into_iter().map(|c| -c).collect());
    }
    seq
}

fn sign_changes(seq: &[Dense], x: &BigRational) -> usize {
    let mut last = 0i8;
    let mut changes = 0;
    for s in seq {
        let v = horner(s, x);
        let sg = if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        };
        if sg != 0 {
            if last != 0 && sg != last {
                changes += 1;
            }
            last = sg;
        }
    }
    changes
}

/// Isolates every real root of the univariate polynomial `p` in `[lo, hi]`
/// into disjoint intervals of width at most `tol`, sorted ascending.
///
/// `p` may live in a multivariate space as long as it uses a single variable.
pub fn isolate_real_roots(p: &Polynomial, lo: f64, hi: f64, tol: f64) -> Result<Vec<RootInterval>, PolyError> {
    if p.is_zero() {
        return Err(PolyError::ZeroPolynomial);
    }
    if !(lo <= hi) || !(tol > 0.0) {
        return Err(PolyError::InvalidInterval { lo, hi });
    }
    let coeffs = p.univariate_coeffs()?;
    let lo = f64_to_rational(lo)?;
    let hi = f64_to_rational(hi)?;
    let tol = f64_to_rational(tol)?;
    Ok(isolate_dense(&coeffs, lo, hi, &tol))
}

fn isolate_dense(coeffs: &[BigRational], lo: BigRational, hi: BigRational, tol: &BigRational) -> Vec<RootInterval> {
    let coeffs = trim(coeffs.to_vec());
    let mut out = Vec::new();
    if coeffs.len() <= 1 {
        return out;
    }
    // Square-free part: p / gcd(p, p').
    let g = gcd_dense(&coeffs, &derivative(&coeffs));
    let mut q = if g.len() > 1 { divrem(&coeffs, &g).0 } else { coeffs };

    let deflate = |q: &mut Dense, r: &BigRational| {
        let lin = vec![-r.clone(), BigRational::one()];
        *q = divrem(q, &lin).0;
    };

    for end in [&lo, &hi] {
        if q.len() > 1 && horner(&q, end).is_zero() {
            out.push(RootInterval { lo: end.clone(), hi: end.clone() });
            deflate(&mut q, end);
        }
    }
    if lo == hi {
        out.dedup();
        return out;
    }

    let two = BigRational::from_integer(2.into());
    let mut seq = sturm_sequence(&q);
    let mut stack = vec![(lo, hi)];
    while let Some((a, b)) = stack.pop() {
        if q.len() <= 1 {
            break;
        }
        let count = sign_changes(&seq, &a).saturating_sub(sign_changes(&seq, &b));
        if count == 0 {
            continue;
        }
        if count == 1 && &b - &a <= *tol {
            out.push(RootInterval { lo: a, hi: b });
            continue;
        }
        let m = (&a + &b) / &two;
        if horner(&q, &m).is_zero() {
            out.push(RootInterval { lo: m.clone(), hi: m.clone() });
            deflate(&mut q, &m);
            seq = sturm_sequence(&q);
        }
        stack.push((a, m.clone()));
        stack.push((m, b));
    }
    out.sort_by(|x, y| x.lo.cmp(&y.lo));
    out
}

/// Cauchy bound: every complex root of the univariate `p` has modulus below the returned value.
pub fn cauchy_bound(p: &Polynomial) -> Result<f64, PolyError> {
    let c = trim(p.univariate_coeffs()?);
    let lead = rational_to_f64(c.last().expect("nonempty")).abs();
    if c.len() <= 1 || lead == 0.0 {
        return Ok(1.0);
    }
    let m = c[..c.len() - 1].iter().map(|x| rational_to_f64(x).abs()).fold(0.0, f64::max);
    Ok(1.0 + m / lead)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, parse};
    use proptest::prelude::*;

    fn p(s: &str) -> Polynomial {
        parse(s, &["x"]).unwrap()
    }

    #[test]
    fn sqrt_two() {
        let roots = isolate_real_roots(&p("x^2 - 2"), 0.0, 2.0, 1e-9).unwrap();
        assert_eq!(roots.len(), 1);
        // Independent bisection oracle on f64.
        let (mut a, mut b) = (0.0f64, 2.0f64);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if m * m - 2.0 > 0.0 {
                b = m
            } else {
                a = m
            }
        }
        let r = &roots[0];
        assert!(r.width() <= 1e-9);
        assert!(r.lo_f64() <= a && b <= r.hi_f64() + 1e-15);
    }

    #[test]
    fn no_real_roots() {
        assert!(isolate_real_roots(&p("x^2 + 1"), -10.0, 10.0, 1e-6).unwrap().is_empty());
    }

    #[test]
    fn exact_hits_and_endpoints() {
        let roots = isolate_real_roots(&p("x*(x - 1)"), -1.0, 2.0, 1e-6).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots[0].lo_f64() <= 0.0 && 0.0 <= roots[0].hi_f64());
        assert!(roots[1].lo_f64() <= 1.0 && 1.0 <= roots[1].hi_f64());
        let roots = isolate_real_roots(&p("(x - 1)*(x + 1)^3"), -1.0, 1.0, 1e-6).unwrap();
        assert_eq!(roots.len(), 2);
        assert_eq!(roots[0].lo, int(-1));
        assert_eq!(roots[1].hi, int(1));
    }

    #[test]
    fn zero_is_an_error() {
        assert!(matches!(isolate_real_roots(&Polynomial::zero(1), 0.0, 1.0, 0.1), Err(PolyError::ZeroPolynomial)));
    }

    #[test]
    fn bound_contains_roots() {
        let q = p("2*x^3 - 7*x + 1");
        let b = cauchy_bound(&q).unwrap();
        let roots = isolate_real_roots(&q, -b, b, 1e-8).unwrap();
        assert_eq!(roots.len(), 3);
    }

    proptest! {
        #[test]
        fn finds_exactly_the_known_roots(mut rs in prop::collection::vec((-20i64..20, 1i64..4), 1..6)) {
            let mut q = Polynomial::one(1);
            for &(n, d) in &rs {
                q = &q * &p(&format!("{d}*x - ({n})"));
            }
            let roots = isolate_real_roots(&q, -25.0, 25.0, 1e-6).unwrap();
            let mut want: Vec<f64> = rs.drain(..).map(|(n, d)| n as f64 / d as f64).collect();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            want.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            prop_assert_eq!(roots.len(), want.len());
            for (r, w) in roots.iter().zip(&want) {
                prop_assert!(r.lo_f64() <= *w + 1e-12 && *w <= r.hi_f64() + 1e-12);
                prop_assert!(r.width() <= 1e-6);
            }
        }
    }
}
