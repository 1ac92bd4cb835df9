//! Exact division, multivariate gcd and square-free decomposition over Q.
//!
//! The gcd is the classical recursive primitive-remainder-sequence algorithm:
//! the main variable is the highest-indexed variable present, contents are
//! computed recursively in the remaining variables.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Exponents, Polynomial};

/// Exact quotient `a / b`, or `None` when `b` does not divide `a`.
///
/// Uses lexicographic leading-term division, which terminates because the
/// leading term of the running remainder strictly decreases.
pub fn exact_div(a: &Polynomial, b: &Polynomial) -> Option<Polynomial> {
    assert_eq!(a.nvars(), b.nvars());
    let (lb_e, lb_c) = b.leading_term()?;
    let lb_e = lb_e.clone();
    let lb_inv = lb_c.recip();
    let mut rem = a.clone();
    let mut quot = Polynomial::zero(a.nvars());
    while let Some((e, c)) = rem.leading_term() {
        if e.iter().zip(&lb_e).any(|(x, y)| x < y) {
            return None;
        }
        let qe: Exponents = e.iter().zip(&lb_e).map(|(x, y)| x - y).collect();
        let qc = c * &lb_inv;
        rem = &rem - &b.mul_term(&qe, &qc);
        quot = &quot + &Polynomial::monomial(a.nvars(), qe, qc);
    }
    Some(quot)
}

/// Pseudo-remainder of `a` by `b` with respect to `var`:
/// `lc(b)^(deg a - deg b + 1) * a mod b`.
pub fn pseudo_remainder(a: &Polynomial, b: &Polynomial, var: usize) -> Polynomial {
    let nv = a.nvars();
    let db = b.degree_in(var).finite().expect("nonzero divisor") as usize;
    let bc = b.to_univariate(var);
    let lcb = bc[db].clone();
    let mut r = a.to_univariate(var);
    trim(&mut r);
    if r.len() < db + 1 {
        return a.clone();
    }
    let mut steps = (r.len() - db) as u32;
    while r.len() > db && !(r.len() == 1 && r[0].is_zero()) {
        let dr = r.len() - 1;
        let lcr = r[dr].clone();
        let shift = dr - db;
        // r := lcb * r - lcr * x^shift * b
        for c in r.iter_mut() {
            *c = &*c * &lcb;
        }
        for (k, bk) in bc.iter().enumerate() {
            r[k + shift] = &r[k + shift] - &(&lcr * bk);
        }
        trim(&mut r);
        steps -= 1;
        if r.is_empty() {
            break;
        }
    }
    let mut out = Polynomial::from_univariate(var, &r, nv);
    if steps > 0 {
        out = &out * &lcb.pow(steps);
    }
    out
}

fn trim(v: &mut Vec<Polynomial>) {
    while v.len() > 1 && v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    if v.len() == 1 && v[0].is_zero() {
        v.clear();
    }
}

/// Gcd of the coefficients of `p` viewed as a polynomial in `var`
/// (normalized monic; one for a polynomial free of `var` that is constant).
pub fn content(p: &Polynomial, var: usize) -> Polynomial {
    let mut g = Polynomial::zero(p.nvars());
    for c in p.to_univariate(var) {
        if c.is_zero() {
            continue;
        }
        g = gcd(&g, &c);
        if g.is_constant() && !g.is_zero() {
            return Polynomial::one(p.nvars());
        }
    }
    g
}

pub fn primitive_part(p: &Polynomial, var: usize) -> Polynomial {
    if p.is_zero() {
        return p.clone();
    }
    if !p.uses_var(var) {
        return Polynomial::one(p.nvars());
    }
    let c = content(p, var);
    exact_div(p, &c).expect("content divides")
}

/// Greatest common divisor, normalized to have lexicographic leading coefficient 1.
/// `gcd(0, 0) = 0`.
pub fn gcd(a: &Polynomial, b: &Polynomial) -> Polynomial {
    assert_eq!(a.nvars(), b.nvars());
    let nv = a.nvars();
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Polynomial::one(nv);
    }
    let main = (0..nv).rev().find(|&v| a.uses_var(v) || b.uses_var(v)).expect("non-constant");
    if !a.uses_var(main) {
        return gcd(a, &content(b, main));
    }
    if !b.uses_var(main) {
        return gcd(&content(a, main), b);
    }
    let ca = content(a, main);
    let cb = content(b, main);
    let c = gcd(&ca, &cb);
    let mut p = exact_div(a, &ca).expect("content divides");
    let mut q = exact_div(b, &cb).expect("content divides");
    if p.degree_in(main) < q.degree_in(main) {
        std::mem::swap(&mut p, &mut q);
    }
    while !q.is_zero() {
        let r = pseudo_remainder(&p, &q, main);
        p = q;
        if r.is_zero() {
            q = r;
        } else if !r.uses_var(main) {
            p = Polynomial::one(nv);
            break;
        } else {
            q = primitive_part(&r, main);
        }
    }
    let g = primitive_part(&p, main);
    (&c * &g).monic()
}

/// Product of the distinct irreducible factors of `p` (monic). Zero and
/// constants map to themselves (constants to one).
pub fn squarefree_part(p: &Polynomial) -> Polynomial {
    if p.is_zero() {
        return p.clone();
    }
    if p.is_constant() {
        return Polynomial::one(p.nvars());
    }
    let mut g = p.clone();
    for v in p.used_vars() {
        g = gcd(&g, &p.d(v));
        if g.is_constant() {
            break;
        }
    }
    exact_div(p, &g).expect("gcd divides").monic()
}

/// Square-free decomposition `p = c * prod f_k^k` with pairwise coprime,
/// square-free, monic `f_k`. Returns the non-constant `(f_k, k)` pairs.
pub fn squarefree_decomposition(p: &Polynomial) -> Vec<(Polynomial, u32)> {
    let mut out = Vec::new();
    if p.is_constant() {
        return out;
    }
    let mut cur = p.clone();
    let mut prev = squarefree_part(&cur);
    let mut k = 1;
    loop {
        let rest = exact_div(&cur, &prev).expect("square-free part divides");
        let next = if rest.is_constant() { Polynomial::one(p.nvars()) } else { squarefree_part(&rest) };
        let factor = exact_div(&prev, &next).expect("nested square-free parts divide");
        if !factor.is_constant() {
            out.push((factor.monic(), k));
        }
        if next.is_constant() {
            break;
        }
        cur = rest;
        prev = next;
        k += 1;
    }
    out
}

#[allow(dead_code)]
pub(crate) fn is_unit(p: &Polynomial) -> bool {
    p.constant_value().is_some_and(|c| !c.is_zero() && c == BigRational::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse;

    const V: [&str; 3] = ["x", "y", "u"];

    fn p(s: &str) -> Polynomial {
        parse(s, &V).unwrap()
    }

    #[test]
    fn exact_division() {
        let a = p("(x - y)*(x^2 + u*y + 1)");
        assert_eq!(exact_div(&a, &p("x - y")).unwrap(), p("x^2 + u*y + 1"));
        assert!(exact_div(&p("x^2 + 1"), &p("x - 1")).is_none());
    }

    #[test]
    fn gcd_of_products() {
        let common = p("x*y - u^2 + 3");
        let a = &common * &p("x + 2*y");
        let b = &common * &p("x - u");
        assert_eq!(gcd(&a, &b), common.monic());
        assert_eq!(gcd(&p("x + 1"), &p("x - 1")), Polynomial::one(3));
        assert_eq!(gcd(&p("x^2*y"), &p("x*y^3")), p("x*y"));
    }

    #[test]
    fn squarefree() {
        let a = p("x^2*(y - x^4)^3*(u + 1)");
        assert_eq!(squarefree_part(&a), p("x*(y - x^4)*(u + 1)").monic());
        let dec = squarefree_decomposition(&a);
        let mults: Vec<u32> = dec.iter().map(|(_, k)| *k).collect();
        assert_eq!(mults, vec![1, 2, 3]);
        assert_eq!(dec[0].0, p("u + 1").monic());
        assert_eq!(dec[1].0, p("x"));
        assert_eq!(dec[2].0, p("y - x^4").monic());
    }

    #[test]
    fn pseudo_remainder_matches_definition() {
        let a = p("y*x^3 + x + u");
        let b = p("y*x + 1");
        let r = pseudo_remainder(&a, &b, 0);
        // y^3 * a = q*b + r with deg_x r < 1
        assert!(!r.uses_var(0));
        let lhs = &a * &p("y^3");
        let diff = &lhs - &r;
        assert!(exact_div(&diff, &b).is_some());
    }
}
