//! Closed-form exponent bounds, computed in exact big-integer arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("dimension n must be at least 1")]
    DimensionZero,
    #[error("degree d must be at least {min}, got {d}")]
    DegreeTooSmall { d: u32, min: u32 },
    #[error("exponent rho must lie in [0, 1), got {0}")]
    RhoOutOfRange(String),
    #[error("degree list is empty")]
    EmptyDegreeList,
    #[error("degree list contains a zero degree")]
    ZeroDegree,
}

/// Hypotheses known to hold for the function under study.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumptions {
    /// The defining polynomial has `dP/dy != 0` along the graph.
    pub partial_y_nonzero: bool,
    /// The base point is an isolated zero of f.
    pub isolated_zero: bool,
    /// f is itself a polynomial of degree d.
    pub polynomial_f: bool,
    /// f = p/q with p(0) = 0, q(0) != 0 and d = deg p.
    pub rational_f: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    RhoBound,
    DistExponent,
    SufficiencyDegree,
    LojExponent,
    TotalDegree,
}

/// An exact bound value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExactValue {
    Integer(BigUint),
    Rational(BigRational),
    /// The exponent `1 - 1/N`.
    OneMinusInverse(BigUint),
}

impl ExactValue {
    /// Normalizing constructor: non-negative integral values become `Integer`.
    pub fn from_rational(q: BigRational) -> Self {
        if q.is_integer() && !q.is_negative() {
            ExactValue::Integer(q.to_integer().to_biguint().expect("non-negative"))
        } else {
            ExactValue::Rational(q)
        }
    }

    pub fn to_rational(&self) -> BigRational {
        match self {
            ExactValue::Integer(k) => BigRational::from_integer(k.clone().into()),
            ExactValue::Rational(q) => q.clone(),
            ExactValue::OneMinusInverse(n) => {
                BigRational::one() - BigRational::new(1.into(), n.clone().into())
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        crate::poly::rational_to_f64(&self.to_rational())
    }
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactValue::Integer(k) => write!(f, "{k}"),
            ExactValue::Rational(q) => write!(f, "{q}"),
            ExactValue::OneMinusInverse(n) => write!(f, "1 - 1/{n}"),
        }
    }
}

impl FromStr for ExactValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("1 - 1/") {
            return rest.parse().map(ExactValue::OneMinusInverse).map_err(|e| format!("{e}"));
        }
        if s.contains('/') {
            return s.parse().map(ExactValue::Rational).map_err(|e| format!("{e}"));
        }
        s.parse().map(ExactValue::Integer).map_err(|e| format!("{e}"))
    }
}

impl Serialize for ExactValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: String,
    pub kind: EntryKind,
    pub value: ExactValue,
    pub source: String,
    #[serde(default)]
    pub best: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundEntry {
    fn new(name: &str, kind: EntryKind, value: ExactValue, source: &str) -> Self {
        BoundEntry { name: name.into(), kind, value, source: source.into(), best: false, note: None }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Result of a degree-type formula that degenerates for linear functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DegreeBound {
    /// d = 1: f is linear, the gradient exponent is 0.
    Linear,
    Value(BigUint),
}

impl DegreeBound {
    pub fn value(&self) -> Option<&BigUint> {
        match self {
            DegreeBound::Linear => None,
            DegreeBound::Value(v) => Some(v),
        }
    }
}

fn big(k: u64) -> BigUint {
    BigUint::from(k)
}

fn check_n(n: u32) -> Result<(), BoundError> {
    if n == 0 {
        Err(BoundError::DimensionZero)
    } else {
        Ok(())
    }
}

fn check_d(d: u32, min: u32) -> Result<(), BoundError> {
    if d < min {
        Err(BoundError::DegreeTooSmall { d, min })
    } else {
        Ok(())
    }
}

/// `max{2d(2d-1), d(3d-2)^n} + 1`; `Linear` for d = 1.
pub fn r_bound(n: u32, d: u32) -> Result<DegreeBound, BoundError> {
    check_n(n)?;
    check_d(d, 1)?;
    if d == 1 {
        return Ok(DegreeBound::Linear);
    }
    let d64 = d as u64;
    let a = big(2 * d64 * (2 * d64 - 1));
    let b = big(d64) * big(3 * d64 - 2).pow(n);
    Ok(DegreeBound::Value(a.max(b) + 1u32))
}

/// `2(2d-1)^(3n+1)`.
pub fn s_bound(n: u32, d: u32) -> Result<BigUint, BoundError> {
    check_n(n)?;
    check_d(d, 1)?;
    Ok(big(2) * big(2 * d as u64 - 1).pow(3 * n + 1))
}

/// Denominator N of the isolated-zero polynomial bound `1 - 1/N`, `N = (d-1)^n + 1`.
pub fn g2_denominator(n: u32, d: u32) -> Result<BigUint, BoundError> {
    check_n(n)?;
    check_d(d, 1)?;
    Ok(big(d as u64 - 1).pow(n) + 1u32)
}

/// Denominator N of the general polynomial bound `1 - 1/N`, `N = d(3d-3)^(n-1)`; needs d >= 2.
pub fn dk_denominator(n: u32, d: u32) -> Result<BigUint, BoundError> {
    check_n(n)?;
    check_d(d, 2)?;
    Ok(big(d as u64) * big(3 * d as u64 - 3).pow(n - 1))
}

/// `d(6d-3)^(n + n(n+1)/2 - 1)`, the earlier semialgebraic distance exponent.
pub fn prior_bound(n: u32, d: u32) -> Result<BigUint, BoundError> {
    check_n(n)?;
    check_d(d, 1)?;
    Ok(big(d as u64) * big(6 * d as u64 - 3).pow(n + n * (n + 1) / 2 - 1))
}

fn linear_entry() -> BoundEntry {
    BoundEntry::new("linear", EntryKind::RhoBound, ExactValue::from_rational(BigRational::zero()), "Section 2 (d = 1)")
        .with_note("f is linear; the gradient inequality holds with exponent 0")
}

fn mark_best(entries: &mut [BoundEntry]) {
    let best = entries
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.to_rational().cmp(&b.1.value.to_rational()).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    if let Some(i) = best {
        entries[i].best = true;
    }
}

/// All applicable gradient-exponent bounds; exactly one entry is marked `best`.
pub fn rho_bounds(n: u32, d: u32, a: &Assumptions) -> Result<Vec<BoundEntry>, BoundError> {
    check_n(n)?;
    check_d(d, 1)?;
    if d == 1 {
        let mut e = linear_entry();
        e.best = true;
        return Ok(vec![e]);
    }
    let mut out = Vec::new();
    if a.partial_y_nonzero {
        let r = r_bound(n, d)?.value().cloned().expect("d >= 2");
        out.push(BoundEntry::new("theorem_2_1", EntryKind::RhoBound, ExactValue::OneMinusInverse(r), "Theorem 2.1"));
    }
    out.push(BoundEntry::new(
        "theorem_2_2",
        EntryKind::RhoBound,
        ExactValue::OneMinusInverse(s_bound(n, d)?),
        "Theorem 2.2",
    ));
    if a.polynomial_f || a.rational_f {
        out.push(BoundEntry::new("dk", EntryKind::RhoBound, ExactValue::OneMinusInverse(dk_denominator(n, d)?), "(DK)"));
        if a.isolated_zero {
            out.push(BoundEntry::new(
                "g2",
                EntryKind::RhoBound,
                ExactValue::OneMinusInverse(g2_denominator(n, d)?),
                "(G2)",
            ));
        }
    }
    mark_best(&mut out);
    Ok(out)
}

/// The smallest admissible exponent from [`rho_bounds`].
pub fn best_rho(n: u32, d: u32, a: &Assumptions) -> Result<BoundEntry, BoundError> {
    Ok(rho_bounds(n, d, a)?.into_iter().find(|e| e.best).expect("one best entry"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sufficiency {
    pub k: ExactValue,
    pub source: String,
    pub candidates: Vec<BoundEntry>,
}

/// Jet order k guaranteeing sufficiency, the smallest over the applicable results.
pub fn sufficiency_degree(n: u32, d: u32, a: &Assumptions) -> Result<Sufficiency, BoundError> {
    check_n(n)?;
    check_d(d, 1)?;
    let mut c = Vec::new();
    if d == 1 {
        c.push(
            BoundEntry::new("linear", EntryKind::SufficiencyDegree, ExactValue::Integer(big(1)), "Section 2 (d = 1)")
                .with_note("f is linear"),
        );
    } else {
        c.push(BoundEntry::new(
            "theorem_1_3",
            EntryKind::SufficiencyDegree,
            ExactValue::Integer(s_bound(n, d)?),
            "Theorem 1.3",
        ));
        if a.partial_y_nonzero {
            let k = big(d as u64) * big(3 * d as u64 - 2).pow(n) + 1u32;
            c.push(BoundEntry::new("theorem_1_4", EntryKind::SufficiencyDegree, ExactValue::Integer(k), "Theorem 1.4"));
        }
        if a.polynomial_f || a.rational_f {
            c.push(BoundEntry::new(
                "remark_1_5_dk",
                EntryKind::SufficiencyDegree,
                ExactValue::Integer(dk_denominator(n, d)?),
                "Remark 1.5",
            ));
            if a.isolated_zero {
                c.push(BoundEntry::new(
                    "remark_1_5_g2",
                    EntryKind::SufficiencyDegree,
                    ExactValue::Integer(g2_denominator(n, d)?),
                    "Remark 1.5",
                ));
            }
        }
    }
    mark_best(&mut c);
    let best = c.iter().find(|e| e.best).expect("one best entry");
    Ok(Sufficiency { k: best.value.clone(), source: best.source.clone(), candidates: c })
}

const DIST_DERIVED_NOTE: &str = "derived as 1/(1 - rho) with rho = 1 - 1/R(n,d), giving R(n,d); \
the closed form d(3d-2)^(n+1) quoted alongside this corollary disagrees and is not used";
const GRAD_EXPONENT_NOTE: &str = "gradient exponent computed as rho/(1 - rho); the quoted form e/(1 - rho) is not used";

/// Distance exponents for `|f| >= C dist^a` and `|grad f| >= C dist^b`, plus the
/// global exponent bound and, when `user_rho` is given, `1/(1 - rho)`.
pub fn dist_exponents(
    n: u32,
    d: u32,
    a: &Assumptions,
    user_rho: Option<&BigRational>,
) -> Result<Vec<BoundEntry>, BoundError> {
    check_n(n)?;
    check_d(d, 1)?;
    if let Some(rho) = user_rho {
        if rho.is_negative() || *rho >= BigRational::one() {
            return Err(BoundError::RhoOutOfRange(rho.to_string()));
        }
    }
    let s = s_bound(n, d)?;
    let mut out = vec![
        BoundEntry::new("corollary_3_6_f", EntryKind::DistExponent, ExactValue::Integer(s.clone()), "Corollary 3.6"),
        BoundEntry::new(
            "corollary_3_6_grad",
            EntryKind::DistExponent,
            ExactValue::Integer(&s - 1u32),
            "Corollary 3.6",
        )
        .with_note(GRAD_EXPONENT_NOTE),
    ];
    if a.partial_y_nonzero {
        if let DegreeBound::Value(r) = r_bound(n, d)? {
            out.push(
                BoundEntry::new("theorem_2_1_dist_f", EntryKind::DistExponent, ExactValue::Integer(r.clone()), "Corollary 3.6")
                    .with_note(DIST_DERIVED_NOTE),
            );
            out.push(
                BoundEntry::new(
                    "theorem_2_1_dist_grad",
                    EntryKind::DistExponent,
                    ExactValue::Integer(&r - 1u32),
                    "Corollary 3.6",
                )
                .with_note(GRAD_EXPONENT_NOTE),
            );
        }
    }
    out.push(BoundEntry::new("corollary_3_8", EntryKind::LojExponent, ExactValue::Integer(s), "Corollary 3.8"));
    if let Some(rho) = user_rho {
        let l = (BigRational::one() - rho).recip();
        out.push(BoundEntry::new("corollary_3_7", EntryKind::LojExponent, ExactValue::from_rational(l), "Corollary 3.7"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorComparison {
    pub bound: ExactValue,
    pub prior_bound: ExactValue,
    pub sharper: bool,
}

/// Compares `2(2d-1)^(3n+1)` with the earlier `d(6d-3)^(n + n(n+1)/2 - 1)`.
pub fn prior_bound_comparison(n: u32, d: u32) -> Result<PriorComparison, BoundError> {
    let ours = s_bound(n, d)?;
    let prior = prior_bound(n, d)?;
    Ok(PriorComparison { sharper: ours < prior, bound: ExactValue::Integer(ours), prior_bound: ExactValue::Integer(prior) })
}

/// Product of degrees, the Bezout-type bound on the total degree of an intersection.
pub fn total_degree_product(degrees: &[u32]) -> Result<BigUint, BoundError> {
    if degrees.is_empty() {
        return Err(BoundError::EmptyDegreeList);
    }
    if degrees.contains(&0) {
        return Err(BoundError::ZeroDegree);
    }
    Ok(degrees.iter().fold(BigUint::one(), |acc, &k| acc * big(k as u64)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: u32,
    pub d: u32,
    pub assumptions: Assumptions,
    pub linear: bool,
    pub entries: Vec<BoundEntry>,
    /// Name to rendered value, for quick lookup.
    pub values: BTreeMap<String, String>,
    pub best_rho: ExactValue,
    pub sufficiency: Sufficiency,
    pub prior_comparison: PriorComparison,
    pub r_bound: Option<ExactValue>,
    pub s_bound: ExactValue,
}

impl BoundReport {
    pub fn entry(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// The smallest `|f|` distance exponent on offer.
    pub fn best_dist_exponent(&self) -> BigRational {
        self.entries
            .iter()
            .filter(|e| e.kind == EntryKind::DistExponent && !e.name.ends_with("_grad"))
            .map(|e| e.value.to_rational())
            .min()
            .expect("at least the general exponent")
    }
}

/// Every closed-form bound for `(n, d)` under the given assumptions.
pub fn bound_report(n: u32, d: u32, a: &Assumptions, user_rho: Option<&BigRational>) -> Result<BoundReport, BoundError> {
    let mut entries = rho_bounds(n, d, a)?;
    let best_rho = entries.iter().find(|e| e.best).expect("best").value.clone();
    let sufficiency = sufficiency_degree(n, d, a)?;
    entries.extend(sufficiency.candidates.iter().cloned());
    entries.extend(dist_exponents(n, d, a, user_rho)?);
    let values = entries.iter().map(|e| (e.name.clone(), e.value.to_string())).collect();
    Ok(BoundReport {
        n,
        d,
        assumptions: *a,
        linear: d == 1,
        entries,
        values,
        best_rho,
        sufficiency,
        prior_comparison: prior_bound_comparison(n, d)?,
        r_bound: r_bound(n, d)?.value().cloned().map(ExactValue::Integer),
        s_bound: ExactValue::Integer(s_bound(n, d)?),
    })
}
