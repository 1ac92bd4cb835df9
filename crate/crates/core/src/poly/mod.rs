//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! This is the symbolic substrate of the crate: branch polynomials, the
//! auxiliary elimination systems and the final plane curves are all
//! [`Polynomial`] values. A lightweight `f64` evaluator ([`NumericPoly`]) is
//! provided for the numeric modules.

mod gcd;
mod numeric;
mod parse;
mod resultant;
mod roots;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use gcd::{content, exact_div, gcd, primitive_part, pseudo_remainder, squarefree_decomposition, squarefree_part};
pub use numeric::NumericPoly;
pub use parse::{parse, ParseError};
pub use resultant::{resultant, sylvester_matrix};
pub use roots::{cauchy_bound, isolate_real_roots, RootInterval};

/// Exponent vector of a monomial; its length is always the owning polynomial's `nvars`.
pub type Exponents = Vec<u32>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("variable count mismatch: {left} vs {right}")]
    NvarsMismatch { left: usize, right: usize },
    #[error("variable index {index} out of range for {nvars} variables")]
    VarOutOfRange { index: usize, nvars: usize },
    #[error("point has dimension {got}, polynomial has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polynomial has degree 0 in the elimination variable {var}")]
    DegreeZero { var: usize },
    #[error("zero polynomial")]
    ZeroPolynomial,
    #[error("polynomial is not univariate")]
    NotUnivariate,
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("non-finite value {0} cannot be converted to an exact rational")]
    NonFinite(f64),
}

/// Degree of a polynomial. The zero polynomial has degree `MinusInfinity`,
/// which orders below every finite degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Degree {
    MinusInfinity,
    Finite(u32),
}

impl Degree {
    pub fn finite(self) -> Option<u32> {
        match self {
            Degree::MinusInfinity => None,
            Degree::Finite(d) => Some(d),
        }
    }

    /// Finite degree, with the zero polynomial mapped to 0.
    pub fn or_zero(self) -> u32 {
        self.finite().unwrap_or(0)
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::MinusInfinity => write!(f, "-inf"),
            Degree::Finite(d) => write!(f, "{d}"),
        }
    }
}

/// A point at which a polynomial can be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum RationalPoint {
    Exact(Vec<BigRational>),
    Approx(Vec<f64>),
}

impl RationalPoint {
    pub fn dim(&self) -> usize {
        match self {
            RationalPoint::Exact(v) => v.len(),
            RationalPoint::Approx(v) => v.len(),
        }
    }
}

/// Result of [`Polynomial::eval`]: exact for exact points.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => rational_to_f64(q),
            Value::Approx(x) => *x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponents, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, BigRational::from_integer(BigInt::from(c)))
    }

    /// The polynomial `x_index`.
    ///
    /// Panics if `index >= nvars`.
    pub fn var(nvars: usize, index: usize) -> Self {
        assert!(index < nvars, "variable index {index} out of range for {nvars} variables");
        let mut e = vec![0; nvars];
        e[index] = 1;
        Self::monomial(nvars, e, BigRational::one())
    }

    pub fn monomial(nvars: usize, exps: Exponents, c: BigRational) -> Self {
        assert_eq!(exps.len(), nvars, "exponent vector length must equal nvars");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        Polynomial { nvars, terms }
    }

    /// Collects terms, summing duplicates and dropping zero coefficients.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponents, BigRational)>,
    {
        let mut p = Polynomial::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length must equal nvars");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Exponents, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True for the zero polynomial and for nonzero constants.
    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    pub fn constant_value(&self) -> Option<BigRational> {
        if self.is_zero() {
            Some(BigRational::zero())
        } else if self.is_constant() {
            self.terms.values().next().cloned()
        } else {
            None
        }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending lexicographic order of exponent vectors.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponents, &BigRational)> + '_ {
        self.terms.iter()
    }

    pub fn coefficient(&self, e: &[u32]) -> BigRational {
        self.terms.get(e).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Lexicographically largest term.
    pub fn leading_term(&self) -> Option<(&Exponents, &BigRational)> {
        self.terms.iter().next_back()
    }

    pub fn total_degree(&self) -> Degree {
        self.terms
            .keys()
            .map(|e| Degree::Finite(e.iter().sum()))
            .max()
            .unwrap_or(Degree::MinusInfinity)
    }

    pub fn degree_in(&self, var: usize) -> Degree {
        self.terms
            .keys()
            .map(|e| Degree::Finite(e[var]))
            .max()
            .unwrap_or(Degree::MinusInfinity)
    }

    /// Whether variable `var` occurs with positive exponent in some term.
    pub fn uses_var(&self, var: usize) -> bool {
        self.terms.keys().any(|e| e[var] > 0)
    }

    pub fn used_vars(&self) -> Vec<usize> {
        (0..self.nvars).filter(|&v| self.uses_var(v)).collect()
    }

    pub fn checked_add(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_nvars(other)?;
        Ok(self + other)
    }

    pub fn checked_sub(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_nvars(other)?;
        Ok(self - other)
    }

    pub fn checked_mul(&self, other: &Polynomial) -> Result<Polynomial, PolyError> {
        self.check_nvars(other)?;
        Ok(self * other)
    }

    fn check_nvars(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::NvarsMismatch { left: self.nvars, right: other.nvars });
        }
        Ok(())
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> Polynomial {
        let mut result = Polynomial::one(self.nvars);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Multiplies by the monomial `c * x^e`.
    pub fn mul_term(&self, e: &[u32], c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(k, a)| (k.iter().zip(e).map(|(x, y)| x + y).collect(), a * c))
                .collect(),
        }
    }

    /// Formal partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Result<Polynomial, PolyError> {
        if i >= self.nvars {
            return Err(PolyError::VarOutOfRange { index: i, nvars: self.nvars });
        }
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[i] -= 1;
            out.add_term(d, c * BigRational::from_integer(BigInt::from(e[i])));
        }
        Ok(out)
    }

    /// Panicking variant of [`Polynomial::partial`] for indices known to be valid.
    pub fn d(&self, i: usize) -> Polynomial {
        self.partial(i).expect("variable index in range")
    }

    pub fn eval(&self, pt: &RationalPoint) -> Result<Value, PolyError> {
        if pt.dim() != self.nvars {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, got: pt.dim() });
        }
        Ok(match pt {
            RationalPoint::Exact(x) => Value::Exact(self.eval_exact(x)),
            RationalPoint::Approx(x) => Value::Approx(self.eval_f64(x)),
        })
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        debug_assert_eq!(x.len(), self.nvars);
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| {
                rational_to_f64(c)
                    * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()
            })
            .sum()
    }

    /// Substitutes an exact value for variable `var`; the variable count is kept.
    pub fn substitute(&self, var: usize, value: &BigRational) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut k = e.clone();
            let p = k[var];
            k[var] = 0;
            out.add_term(k, c * num_traits::pow(value.clone(), p as usize));
        }
        out
    }

    /// Re-indexes variables into a space with `nvars` variables; variable `i`
    /// of `self` becomes variable `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Polynomial {
        assert_eq!(map.len(), self.nvars);
        let mut out = Polynomial::zero(nvars);
        for (e, c) in &self.terms {
            let mut k = vec![0; nvars];
            for (i, &p) in e.iter().enumerate() {
                k[map[i]] += p;
            }
            out.add_term(k, c.clone());
        }
        out
    }

    /// Restricts to the listed variables; all others must be absent.
    pub fn restrict(&self, keep: &[usize]) -> Option<Polynomial> {
        let mut out = Polynomial::zero(keep.len());
        for (e, c) in &self.terms {
            if e.iter().enumerate().any(|(i, &p)| p > 0 && !keep.contains(&i)) {
                return None;
            }
            out.add_term(keep.iter().map(|&i| e[i]).collect(), c.clone());
        }
        Some(out)
    }

    /// Coefficients with respect to `var`, lowest power first. Each
    /// coefficient lives in the same variable space and does not involve `var`.
    pub fn to_univariate(&self, var: usize) -> Vec<Polynomial> {
        let deg = self.degree_in(var).or_zero() as usize;
        let mut out = vec![Polynomial::zero(self.nvars); deg + 1];
        if self.is_zero() {
            return out;
        }
        for (e, c) in &self.terms {
            let mut k = e.clone();
            let p = k[var] as usize;
            k[var] = 0;
            out[p].terms.insert(k, c.clone());
        }
        out
    }

    pub fn from_univariate(var: usize, coeffs: &[Polynomial], nvars: usize) -> Polynomial {
        let mut out = Polynomial::zero(nvars);
        for (p, c) in coeffs.iter().enumerate() {
            for (e, a) in &c.terms {
                let mut k = e.clone();
                k[var] += p as u32;
                out.add_term(k, a.clone());
            }
        }
        out
    }

    /// Dense coefficients (lowest power first) of a polynomial that uses at
    /// most one variable.
    pub fn univariate_coeffs(&self) -> Result<Vec<BigRational>, PolyError> {
        let used = self.used_vars();
        if used.len() > 1 {
            return Err(PolyError::NotUnivariate);
        }
        let var = used.first().copied();
        let deg = var.map(|v| self.degree_in(v).or_zero()).unwrap_or(0) as usize;
        let mut out = vec![BigRational::zero(); deg + 1];
        for (e, c) in &self.terms {
            let p = var.map(|v| e[v]).unwrap_or(0) as usize;
            out[p] = c.clone();
        }
        Ok(out)
    }

    /// Divides by the lexicographic leading coefficient.
    pub fn monic(&self) -> Polynomial {
        match self.leading_term() {
            None => self.clone(),
            Some((_, c)) => {
                let inv = c.recip();
                self.scale(&inv)
            }
        }
    }

    /// Scales to coprime integer coefficients. The sign is chosen so that the
    /// term that comes first in [`Polynomial::display_with`] order is positive.
    pub fn primitive_integer(&self) -> Polynomial {
        if self.is_zero() {
            return self.clone();
        }
        let mut lcm = BigInt::one();
        for c in self.terms.values() {
            lcm = num_integer::lcm(lcm, c.denom().clone());
        }
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            let n = (c * BigRational::from_integer(lcm.clone())).to_integer();
            g = num_integer::gcd(g, n);
        }
        let mut factor = BigRational::new(lcm, g);
        let first = self.display_order().into_iter().next().expect("nonzero");
        if self.terms[first].is_negative() {
            factor = -factor;
        }
        self.scale(&factor)
    }

    /// Term order used for rendering: descending lexicographic order of the
    /// reversed exponent vector (the last variable is the most significant).
    fn display_order(&self) -> Vec<&Exponents> {
        let mut keys: Vec<&Exponents> = self.terms.keys().collect();
        keys.sort_by(|a, b| b.iter().rev().cmp(a.iter().rev()));
        keys
    }

    /// Renders in the textual grammar accepted by [`parse`].
    pub fn display_with<S: AsRef<str>>(&self, names: &[S]) -> String {
        assert_eq!(names.len(), self.nvars, "one name per variable");
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, e) in self.display_order().into_iter().enumerate() {
            let c = &self.terms[e];
            let neg = c.is_negative();
            let a = c.abs();
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors: Vec<String> = Vec::new();
            let is_const = e.iter().all(|&k| k == 0);
            if !a.is_one() || is_const {
                factors.push(format_rational(&a));
            }
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => factors.push(names[i].as_ref().to_string()),
                    _ => factors.push(format!("{}^{}", names[i].as_ref(), k)),
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }

    /// Sum of absolute values of the terms at `x`; a natural scale for residuals.
    pub fn abs_term_sum_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                (rational_to_f64(c)
                    * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
                .abs()
            })
            .sum()
    }

    /// Largest absolute coefficient as an `f64`.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| rational_to_f64(c).abs()).fold(0.0, f64::max)
    }
}

fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Huge numerator or denominator: shift both down to a common scale.
    let nb = q.numer().bits() as i64;
    let db = q.denom().bits() as i64;
    let shift_n = (nb - 60).max(0) as usize;
    let shift_d = (db - 60).max(0) as usize;
    let n = (q.numer() >> shift_n).to_f64().unwrap_or(0.0);
    let d = (q.denom() >> shift_d).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi(shift_n as i32 - shift_d as i32)
}

/// Exact rational value of a finite `f64`.
pub fn f64_to_rational(x: f64) -> Result<BigRational, PolyError> {
    BigRational::from_float(x).ok_or(PolyError::NonFinite(x))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "polynomial variable counts differ");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "polynomial variable counts differ");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars, "polynomial variable counts differ");
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &Polynomial) -> Polynomial {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}
