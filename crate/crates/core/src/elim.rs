//! Auxiliary polynomial systems for the critical profile, elimination to a
//! plane curve `Q(y, u) = 0` and exponent extraction from that curve.
//!
//! Variables are laid out as `x1..xn, y, u` followed, on the tz-route, by
//! `t1..tn, z1..zn`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{total_degree_product, BoundError};
use crate::empirical::{sample_levels, CriticalProfile, EmpiricalError, ProfileOptions};
use crate::nash::{branch_var_names, NashBranch, NashError};
use crate::poly::{
    exact_div, gcd, rational_to_f64, resultant, squarefree_part, Polynomial, PolyError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ElimError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Nash(#[from] NashError),
    #[error(transparent)]
    Empirical(#[from] EmpiricalError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error("P must be non-constant")]
    ConstantP,
    #[error("the boundary system needs n >= 2 (n = 1 is the interval case)")]
    BoundaryNeedsTwoVars,
    #[error("radius must be positive")]
    BadRadius,
    #[error("resultant elimination supports n <= 3, got n = {0}; use interpolation")]
    TooManyVariables(usize),
    #[error("resultants collapsed to zero while eliminating {var}: the generators share a component")]
    Collapse { var: String },
    #[error("intermediate resultant has {terms} terms (limit {limit}); use interpolation")]
    TooLarge { terms: usize, limit: usize },
    #[error("elimination left no curve in (y, u) that depends on u")]
    NoCurve,
    #[error("the projection is empty (a resultant is a nonzero constant)")]
    EmptyProjection,
    #[error("interpolation needs a branch to sample")]
    NeedsBranch,
    #[error("interpolation is ambiguous at degree {degree}: {} null vectors", .candidates.len())]
    Ambiguous { degree: u32, candidates: Vec<String> },
    #[error("no curve of degree <= {degree} fits the samples (best residual {residual:e})")]
    ResidualTooLarge { degree: u32, residual: f64 },
    #[error("too few profile samples ({got}) for degree {degree} (need {need})")]
    TooFewSamples { degree: u32, got: usize, need: usize },
    #[error("curve has total degree 0")]
    DegreeZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// Minimizers in the interior of the ball.
    I,
    /// Minimizers on the boundary sphere.
    II,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Multiplier-free determinants in `(x, y, u)`.
    K,
    /// Auxiliary gradient variables `t` and multiplier vectors `z`.
    Tz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Resultant,
    Interpolate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    SymbolicResultant,
    NumericInterpolation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    pub poly: Polynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationSystem {
    pub case: Case,
    pub route: Route,
    pub n: usize,
    pub radius: Option<BigRational>,
    pub center: Vec<BigRational>,
    pub var_names: Vec<String>,
    pub generators: Vec<Generator>,
    /// Product of the total degrees of the nonzero generators.
    pub degree_budget: BigUint,
}

impl EliminationSystem {
    pub fn generator(&self, name: &str) -> Option<&Polynomial> {
        self.generators.iter().find(|g| g.name == name).map(|g| &g.poly)
    }

    pub fn y_var(&self) -> usize {
        self.n
    }

    pub fn u_var(&self) -> usize {
        self.n + 1
    }

    /// Variables eliminated to reach the `(y, u)` plane.
    pub fn eliminated_vars(&self) -> Vec<usize> {
        (0..self.var_names.len()).filter(|&v| v != self.y_var() && v != self.u_var()).collect()
    }

    pub fn render(&self, p: &Polynomial) -> String {
        p.display_with(&self.var_names)
    }
}

fn var_names(n: usize, route: Route) -> Vec<String> {
    let mut v = branch_var_names(n);
    v.push("u".into());
    if route == Route::Tz {
        v.extend((1..=n).map(|i| format!("t{i}")));
        v.extend((1..=n).map(|i| format!("z{i}")));
    }
    v
}

/// `G = sum_i (dP/dx_i)^2 - (dP/dy)^2 u`, in variables `(x, y, u)`.
pub fn build_g(p: &Polynomial) -> Result<Polynomial, ElimError> {
    if p.is_constant() {
        return Err(ElimError::ConstantP);
    }
    let n = p.nvars() - 1;
    let lift = |q: &Polynomial| q.embed(n + 2, &(0..=n).collect::<Vec<_>>());
    let u = Polynomial::var(n + 2, n + 1);
    let mut g = Polynomial::zero(n + 2);
    for i in 0..n {
        let pi = lift(&p.d(i));
        g = &g + &(&pi * &pi);
    }
    let py = lift(&p.d(n));
    Ok(&g - &(&(&py * &py) * &u))
}

fn degree_budget(gens: &[Generator]) -> Result<BigUint, ElimError> {
    let degs: Vec<u32> = gens.iter().filter_map(|g| g.poly.total_degree().finite()).filter(|&d| d > 0).collect();
    if degs.is_empty() {
        return Ok(BigUint::one());
    }
    Ok(total_degree_product(&degs)?)
}

struct Layout {
    n: usize,
    nv: usize,
    route: Route,
}

impl Layout {
    fn lift(&self, p: &Polynomial) -> Polynomial {
        p.embed(self.nv, &(0..p.nvars()).collect::<Vec<_>>())
    }
    fn var(&self, i: usize) -> Polynomial {
        Polynomial::var(self.nv, i)
    }
    fn t(&self, i: usize) -> Polynomial {
        self.var(self.n + 2 + i)
    }
    fn z(&self, i: usize) -> Polynomial {
        self.var(2 * self.n + 2 + i)
    }
}

struct Parts {
    p: Polynomial,
    g: Polynomial,
    px: Vec<Polynomial>,
    py: Polynomial,
    gx: Vec<Polynomial>,
    gy: Polynomial,
}

fn parts(p: &Polynomial, lay: &Layout) -> Result<Parts, ElimError> {
    let g = build_g(p)?;
    let n = lay.n;
    Ok(Parts {
        p: lay.lift(p),
        px: (0..n).map(|i| lay.lift(&p.d(i))).collect(),
        py: lay.lift(&p.d(n)),
        gx: (0..n).map(|i| lay.lift(&g.d(i))).collect(),
        gy: lay.lift(&g.d(n)),
        g: lay.lift(&g),
    })
}

/// Generators `G_1`, `G_{2,i}` and `G_{3,i}` (or `K_{3,i}`) of the tz-route.
fn tz_generators(pp: &Parts, lay: &Layout, use_k3: bool) -> Vec<Generator> {
    let n = lay.n;
    let mut out = Vec::new();
    let mut g1 = lay.var(n + 1);
    for i in 0..n {
        g1 = &g1 - &(&lay.t(i) * &lay.t(i));
    }
    out.push(Generator { name: "G1".into(), poly: g1 });
    for i in 0..n {
        out.push(Generator { name: format!("G2_{}", i + 1), poly: &pp.px[i] + &(&pp.py * &lay.t(i)) });
    }
    let py2 = &pp.py * &pp.py;
    for i in 0..n {
        if use_k3 {
            let k = &(&(&pp.gx[i] * &pp.py) - &(&pp.gy * &pp.px[i])) - &(&(&py2 * &pp.py) * &lay.z(i));
            out.push(Generator { name: format!("K3_{}", i + 1), poly: k });
        } else {
            let g3 = &(&pp.gx[i] + &(&pp.gy * &lay.t(i))) - &(&py2 * &lay.z(i));
            out.push(Generator { name: format!("G3_{}", i + 1), poly: g3 });
        }
    }
    out
}

/// Interior system with the default tz-route choice `G_{3,i}`.
pub fn build_case_i_system(p: &Polynomial, route: Route) -> Result<EliminationSystem, ElimError> {
    build_case_i_system_with(p, route, false)
}

/// Interior system; `use_k3` selects `K_{3,i}` instead of `G_{3,i}` on the tz-route.
pub fn build_case_i_system_with(p: &Polynomial, route: Route, use_k3: bool) -> Result<EliminationSystem, ElimError> {
    if p.is_constant() {
        return Err(ElimError::ConstantP);
    }
    let n = p.nvars() - 1;
    let names = var_names(n, route);
    let lay = Layout { n, nv: names.len(), route };
    let pp = parts(p, &lay)?;
    let mut gens = vec![Generator { name: "P".into(), poly: pp.p.clone() }, Generator { name: "G".into(), poly: pp.g.clone() }];
    match lay.route {
        Route::K => {
            for i in 0..n {
                for j in i + 1..n {
                    let k = &(&pp.px[i] * &pp.gx[j]) - &(&pp.px[j] * &pp.gx[i]);
                    gens.push(Generator { name: format!("K4_{}_{}", i + 1, j + 1), poly: k });
                }
            }
        }
        Route::Tz => {
            gens.extend(tz_generators(&pp, &lay, use_k3));
            for i in 0..n {
                for j in i + 1..n {
                    let g4 = &(&lay.t(i) * &lay.z(j)) - &(&lay.t(j) * &lay.z(i));
                    gens.push(Generator { name: format!("G4_{}_{}", i + 1, j + 1), poly: g4 });
                }
            }
        }
    }
    let degree_budget = degree_budget(&gens)?;
    Ok(EliminationSystem {
        case: Case::I,
        route,
        n,
        radius: None,
        center: vec![BigRational::zero(); n],
        var_names: names,
        generators: gens,
        degree_budget,
    })
}

fn det3(m: [[&Polynomial; 3]; 3]) -> Polynomial {
    let minor = |a: &Polynomial, b: &Polynomial, c: &Polynomial, d: &Polynomial| &(a * d) - &(b * c);
    let t0 = m[0][0] * &minor(m[1][1], m[1][2], m[2][1], m[2][2]);
    let t1 = m[0][1] * &minor(m[1][0], m[1][2], m[2][0], m[2][2]);
    let t2 = m[0][2] * &minor(m[1][0], m[1][1], m[2][0], m[2][1]);
    &(&t0 - &t1) + &t2
}

/// Boundary system on the sphere of radius `r` around `center`.
pub fn build_case_ii_system(
    p: &Polynomial,
    r: &BigRational,
    center: &[BigRational],
    route: Route,
) -> Result<EliminationSystem, ElimError> {
    if p.is_constant() {
        return Err(ElimError::ConstantP);
    }
    let n = p.nvars() - 1;
    if n < 2 {
        return Err(ElimError::BoundaryNeedsTwoVars);
    }
    if !r.is_positive() {
        return Err(ElimError::BadRadius);
    }
    let names = var_names(n, route);
    let lay = Layout { n, nv: names.len(), route };
    let pp = parts(p, &lay)?;
    let shifted: Vec<Polynomial> =
        (0..n).map(|i| &lay.var(i) - &Polynomial::constant(lay.nv, center[i].clone())).collect();
    let mut g0 = Polynomial::constant(lay.nv, -(r * r));
    for s in &shifted {
        g0 = &g0 + &(s * s);
    }
    let mut gens = vec![
        Generator { name: "P".into(), poly: pp.p.clone() },
        Generator { name: "G0".into(), poly: g0 },
        Generator { name: "G".into(), poly: pp.g.clone() },
    ];
    if route == Route::Tz {
        gens.extend(tz_generators(&pp, &lay, false));
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (name, poly) = match route {
                    Route::K => (
                        "K4",
                        det3([
                            [&pp.px[i], &pp.gx[i], &shifted[i]],
                            [&pp.px[j], &pp.gx[j], &shifted[j]],
                            [&pp.px[k], &pp.gx[k], &shifted[k]],
                        ]),
                    ),
                    Route::Tz => (
                        "G4",
                        det3([
                            [&lay.t(i), &lay.z(i), &shifted[i]],
                            [&lay.t(j), &lay.z(j), &shifted[j]],
                            [&lay.t(k), &lay.z(k), &shifted[k]],
                        ]),
                    ),
                };
                gens.push(Generator { name: format!("{name}_{}_{}_{}", i + 1, j + 1, k + 1), poly });
            }
        }
    }
    let degree_budget = degree_budget(&gens)?;
    Ok(EliminationSystem {
        case: Case::II,
        route,
        n,
        radius: Some(r.clone()),
        center: center.to_vec(),
        var_names: names,
        generators: gens,
        degree_budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorStatus {
    Kept,
    /// A power of `y` or `u`.
    Monomial,
    IndependentOfU,
    /// Does not vanish at any sampled profile point.
    OffProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFactor {
    pub text: String,
    pub multiplicity: u32,
    pub status: FactorStatus,
}

/// `Q(y, u) = 0`, with `Q` in the two variables `(y, u)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneCurve {
    #[serde(skip)]
    pub q: Polynomial,
    #[serde(rename = "Q")]
    pub q_text: String,
    #[serde(rename = "D")]
    pub degree: u32,
    pub factors: Vec<CurveFactor>,
    pub provenance: Provenance,
    /// Curves in `(y, u)` produced by the elimination before cleaning.
    pub candidates: Vec<String>,
    /// Common components divided out when a resultant vanished identically.
    pub shared_components: Vec<String>,
    /// `max |Q(y_j, u_j)| / (1 + sum |coeffs|)` over the profile samples used.
    pub residual: Option<f64>,
    pub budget: String,
    /// Interpolation stopped at the degree cap without finding a curve.
    pub cap_exceeded: bool,
    pub note: Option<String>,
}

pub const CURVE_VARS: [&str; 2] = ["y", "u"];

fn curve_from(q: Polynomial) -> Result<(Polynomial, u32), ElimError> {
    let q = q.primitive_integer();
    let d = q.total_degree().finite().ok_or(ElimError::NoCurve)?;
    if d == 0 {
        return Err(ElimError::DegreeZero);
    }
    Ok((q, d))
}

/// Relative size of `p` at a point: `|p| / sum |terms|`.
fn relative_value(p: &Polynomial, pt: &[f64]) -> f64 {
    let scale = p.abs_term_sum_f64(pt);
    if scale == 0.0 {
        0.0
    } else {
        p.eval_f64(pt).abs() / scale
    }
}

fn abs_coeff_sum(p: &Polynomial) -> f64 {
    p.terms().map(|(_, c)| rational_to_f64(&c.abs())).sum()
}

/// `max |Q(y, u)| / (1 + sum |coeffs|)` over the samples.
pub fn curve_residual(q: &Polynomial, samples: &[(f64, f64)]) -> f64 {
    let s = 1.0 + abs_coeff_sum(q);
    samples.iter().map(|&(y, u)| q.eval_f64(&[y, u]).abs() / s).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminateOptions {
    /// Degree cap for interpolation.
    pub cap: u32,
    /// Sampling options for the profile (the levels are chosen by the eliminator).
    pub profile: ProfileOptions,
    /// Abort when an intermediate resultant exceeds this many terms.
    pub max_terms: usize,
    /// Squared relative singular-value threshold for candidate null vectors.
    pub sv_tol: f64,
}

impl Default for EliminateOptions {
    fn default() -> Self {
        EliminateOptions { cap: 12, profile: ProfileOptions::default(), max_terms: 20_000, sv_tol: 1e-9 }
    }
}

/// Eliminates all variables except `(y, u)`.
///
/// With `Method::Resultant`, `profile` (or a profile sampled from `branch`) is
/// used to discard factors that vanish at no profile point; with
/// `Method::Interpolate` a branch is required.
pub fn eliminate_to_curve(
    sys: &EliminationSystem,
    method: Method,
    branch: Option<&NashBranch>,
    profile: Option<&CriticalProfile>,
    opts: &EliminateOptions,
) -> Result<PlaneCurve, ElimError> {
    match method {
        Method::Resultant => {
            let sampled;
            let profile = match (profile, branch) {
                (Some(p), _) => Some(p),
                (None, Some(b)) if sys.case == Case::I => {
                    sampled = crate::empirical::sample_profile(b, &opts.profile)?;
                    Some(&sampled)
                }
                _ => None,
            };
            eliminate_resultant(sys, profile, opts)
        }
        Method::Interpolate => interpolate(sys, branch.ok_or(ElimError::NeedsBranch)?, opts),
    }
}

fn eliminate_resultant(
    sys: &EliminationSystem,
    profile: Option<&CriticalProfile>,
    opts: &EliminateOptions,
) -> Result<PlaneCurve, ElimError> {
    if sys.n > 3 {
        return Err(ElimError::TooManyVariables(sys.n));
    }
    let mut polys: Vec<Polynomial> =
        sys.generators.iter().map(|g| &g.poly).filter(|p| !p.is_zero()).map(squarefree_part).collect();
    dedup(&mut polys);
    let mut remaining = sys.eliminated_vars();
    let mut shared = Vec::new();
    while !remaining.is_empty() {
        // variable of smallest maximal degree first
        let (pos, var) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| (polys.iter().map(|p| p.degree_in(v).or_zero()).max().unwrap_or(0), v))
            .map(|(i, &v)| (i, v))
            .expect("nonempty");
        remaining.remove(pos);
        let (with, mut without): (Vec<Polynomial>, Vec<Polynomial>) = polys.into_iter().partition(|p| p.uses_var(var));
        if with.len() >= 2 {
            let pivot_idx = (0..with.len())
                .min_by_key(|&i| (with[i].degree_in(var).or_zero(), with[i].num_terms()))
                .expect("nonempty");
            let pivot = &with[pivot_idx];
            for (i, q) in with.iter().enumerate() {
                if i == pivot_idx {
                    continue;
                }
                let mut r = resultant(pivot, q, var)?;
                if r.is_zero() {
                    let g = gcd(pivot, q);
                    shared.push(sys.render(&g));
                    let p2 = exact_div(pivot, &g).expect("gcd divides");
                    let q2 = exact_div(q, &g).expect("gcd divides");
                    if p2.is_constant() || q2.is_constant() {
                        // one equation is implied by the other off the shared component
                        continue;
                    }
                    match (p2.uses_var(var), q2.uses_var(var)) {
                        (true, true) => r = resultant(&p2, &q2, var)?,
                        (false, _) => r = p2,
                        (true, false) => r = q2,
                    }
                    if r.is_zero() {
                        return Err(ElimError::Collapse { var: sys.var_names[var].clone() });
                    }
                }
                if r.num_terms() > opts.max_terms {
                    return Err(ElimError::TooLarge { terms: r.num_terms(), limit: opts.max_terms });
                }
                if r.is_constant() {
                    return Err(ElimError::EmptyProjection);
                }
                without.push(squarefree_part(&r));
            }
        }
        polys = without;
        dedup(&mut polys);
    }
    let keep = [sys.y_var(), sys.u_var()];
    let candidates: Vec<Polynomial> = polys.iter().filter_map(|p| p.restrict(&keep)).filter(|p| !p.is_constant()).collect();
    if candidates.is_empty() {
        return Err(ElimError::NoCurve);
    }
    let samples: Option<Vec<(f64, f64)>> = profile.map(|p| p.levels.iter().map(|l| (l.y, l.u)).collect());
    let use_profile = if sys.case == Case::I { samples.as_deref() } else { None };
    let (q, factors, note) = clean(&candidates, use_profile)?;
    let (q, degree) = curve_from(q)?;
    let residual = samples.as_ref().filter(|_| sys.case == Case::I).map(|s| curve_residual(&q, s));
    Ok(PlaneCurve {
        q_text: q.display_with(&CURVE_VARS),
        q,
        degree,
        factors,
        provenance: Provenance::SymbolicResultant,
        candidates: candidates.iter().map(|c| c.primitive_integer().display_with(&CURVE_VARS)).collect(),
        shared_components: shared,
        residual,
        budget: sys.degree_budget.to_string(),
        cap_exceeded: false,
        note,
    })
}

fn dedup(polys: &mut Vec<Polynomial>) {
    let mut seen: Vec<Polynomial> = Vec::new();
    polys.retain(|p| {
        let m = p.monic();
        if seen.contains(&m) {
            false
        } else {
            seen.push(m);
            true
        }
    });
}

/// Pairwise coprime square-free factors covering the square-free parts of `polys`.
fn coprime_base(polys: &[Polynomial]) -> Vec<Polynomial> {
    let mut base: Vec<Polynomial> = Vec::new();
    for p in polys {
        let mut rest = squarefree_part(p);
        let mut next = Vec::new();
        for b in base.drain(..) {
            if rest.is_constant() {
                next.push(b);
                continue;
            }
            let g = gcd(&rest, &b);
            if g.is_constant() {
                next.push(b);
            } else {
                let bq = exact_div(&b, &g).expect("gcd divides");
                rest = exact_div(&rest, &g).expect("gcd divides");
                if !bq.is_constant() {
                    next.push(bq);
                }
                next.push(g);
            }
        }
        if !rest.is_constant() {
            next.push(rest);
        }
        base = next;
    }
    base.into_iter().map(|b| b.monic()).collect()
}

fn multiplicity(p: &Polynomial, f: &Polynomial) -> u32 {
    let mut k = 0;
    let mut cur = p.clone();
    while let Some(q) = exact_div(&cur, f) {
        k += 1;
        cur = q;
        if cur.is_constant() {
            break;
        }
    }
    k
}

/// Splits the candidates into coprime factors and keeps those that depend on
/// `u` and (when samples are given) vanish at some sample.
fn clean(
    candidates: &[Polynomial],
    samples: Option<&[(f64, f64)]>,
) -> Result<(Polynomial, Vec<CurveFactor>, Option<String>), ElimError> {
    // split monomial content off first so that y and u appear as separate factors
    let mut pieces = Vec::new();
    for c in candidates {
        let mut rest = c.clone();
        for v in 0..2 {
            let x = Polynomial::var(2, v);
            while let Some(q) = exact_div(&rest, &x) {
                pieces.push(x.clone());
                rest = q;
            }
        }
        if !rest.is_constant() {
            pieces.push(rest);
        }
    }
    let base = coprime_base(&pieces);
    let vanishes = |f: &Polynomial, s: &[(f64, f64)]| s.iter().any(|&(y, u)| relative_value(f, &[y, u]) <= 1e-6);
    let mut statuses: Vec<FactorStatus> = base
        .iter()
        .map(|f| {
            if f.num_terms() == 1 {
                FactorStatus::Monomial
            } else if !f.uses_var(1) {
                FactorStatus::IndependentOfU
            } else if samples.is_some_and(|s| !vanishes(f, s)) {
                FactorStatus::OffProfile
            } else {
                FactorStatus::Kept
            }
        })
        .collect();
    let mut note = None;
    if !statuses.contains(&FactorStatus::Kept) {
        let mut any = false;
        for s in statuses.iter_mut() {
            if *s == FactorStatus::OffProfile {
                *s = FactorStatus::Kept;
                any = true;
            }
        }
        if !any {
            return Err(ElimError::NoCurve);
        }
        note = Some("no factor vanishes on the sampled profile; profile filter not applied".into());
    }
    let mut q = Polynomial::one(2);
    let mut factors = Vec::new();
    for (f, st) in base.iter().zip(&statuses) {
        if *st == FactorStatus::Kept {
            q = &q * f;
        }
        let mult = candidates.iter().map(|c| multiplicity(c, f)).max().unwrap_or(1).max(1);
        factors.push(CurveFactor { text: f.primitive_integer().display_with(&CURVE_VARS), multiplicity: mult, status: *st });
    }
    Ok((q, factors, note))
}

/// Monomials `y^a u^b` with `a + b <= d`, ordered by total degree.
fn monomials(d: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for t in 0..=d {
        for b in 0..=t {
            out.push((t - b, b));
        }
    }
    out
}

fn interpolation_levels(b: &NashBranch, opts: &EliminateOptions, count: usize) -> Result<Vec<f64>, ElimError> {
    let po = &opts.profile;
    let center = po.center.clone().unwrap_or_else(|| b.center().to_vec());
    let radius = po.radius.unwrap_or(b.radius());
    let starts = crate::region::Region::ball(center, radius).halton_points(po.starts, po.seed);
    let mut pos = false;
    let mut neg = false;
    for s in &starts {
        let v = b.eval(s)?;
        pos |= v > 0.0;
        neg |= v < 0.0;
    }
    let mut levels = Vec::new();
    for (sign, on) in [(1.0, pos), (-1.0, neg)] {
        if on {
            levels.extend((1..=count).map(|j| sign * po.epsilon * j as f64 / (count + 1) as f64));
        }
    }
    Ok(levels)
}

/// Rational approximation of `x` by continued fractions, within `tol` relative.
fn rationalize(x: f64, tol: f64) -> BigRational {
    if x == 0.0 {
        return BigRational::zero();
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut r = x.abs();
    for _ in 0..40 {
        let a = r.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
        let approx = h1.to_f64().unwrap_or(f64::INFINITY) / k1.to_f64().unwrap_or(1.0);
        if (approx - x.abs()).abs() <= tol * x.abs() || r - a < 1e-12 {
            break;
        }
        r = 1.0 / (r - a);
    }
    let q = BigRational::new(h1, k1);
    if x < 0.0 { -q } else { q }
}

/// Affine maps sending the sample ranges of `y` and `u` onto `[-1, 1]`.
#[derive(Debug, Clone, Copy)]
struct Frame {
    cy: f64,
    sy: f64,
    cu: f64,
    su: f64,
}

impl Frame {
    fn new(samples: &[(f64, f64)]) -> Self {
        let range = |f: &dyn Fn(&(f64, f64)) -> f64| {
            let lo = samples.iter().map(f).fold(f64::INFINITY, f64::min);
            let hi = samples.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            let half = 0.5 * (hi - lo);
            (0.5 * (hi + lo), if half > 0.0 { half } else { 1.0 })
        };
        let (cy, sy) = range(&|p| p.0);
        let (cu, su) = range(&|p| p.1);
        Frame { cy, sy, cu, su }
    }

    fn map(&self, (y, u): (f64, f64)) -> (f64, f64) {
        ((y - self.cy) / self.sy, (u - self.cu) / self.su)
    }

    /// Coefficients in `(y, u)` of `sum c_k Y^a U^b` with `Y, U` the mapped variables.
    fn pull_back(&self, mons: &[(u32, u32)], coeffs: &[f64], d: u32) -> Vec<f64> {
        let m = d as usize + 1;
        let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        // (v - c)^k / s^k expanded in powers of v
        let powers = |c: f64, s: f64, k: usize| -> Vec<f64> {
            (0..=k).map(|j| binom(k, j) * (-c).powi((k - j) as i32) / s.powi(k as i32)).collect()
        };
        let mut out = vec![0.0; m * m];
        for (&(a, b), &c) in mons.iter().zip(coeffs) {
            let py = powers(self.cy, self.sy, a as usize);
            let pu = powers(self.cu, self.su, b as usize);
            for (i, vy) in py.iter().enumerate() {
                for (j, vu) in pu.iter().enumerate() {
                    out[i * m + j] += c * vy * vu;
                }
            }
        }
        out
    }
}

/// Right singular vectors of the monomial matrix in the mapped variables,
/// smallest singular value first.
fn singular_vectors(samples: &[(f64, f64)], mons: &[(u32, u32)]) -> Vec<(f64, Vec<f64>)> {
    let frame = Frame::new(samples);
    let mapped: Vec<(f64, f64)> = samples.iter().map(|&p| frame.map(p)).collect();
    let rows = samples.len();
    let cols = mons.len();
    let mut a = DMatrix::from_fn(rows, cols, |r, c| {
        let (y, u) = mapped[r];
        y.powi(mons[c].0 as i32) * u.powi(mons[c].1 as i32)
    });
    let scales: Vec<f64> = (0..cols).map(|c| a.column(c).norm().max(f64::MIN_POSITIVE)).collect();
    for (c, s) in scales.iter().enumerate() {
        a.column_mut(c).scale_mut(1.0 / s);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.max().max(f64::MIN_POSITIVE);
    let d = mons.iter().map(|&(a, b)| a + b).max().unwrap_or(0);
    let m = d as usize + 1;
    let mut all: Vec<(f64, Vec<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let v: Vec<f64> = (0..cols).map(|c| v_t[(k, c)] / scales[c]).collect();
            let dense = frame.pull_back(mons, &v, d);
            let back: Vec<f64> = mons.iter().map(|&(a, b)| dense[a as usize * m + b as usize]).collect();
            (s / smax, back)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all
}

/// `max |Q(y, u)| / sum |terms of Q at (y, u)|` over the samples.
fn relative_residual(q: &Polynomial, samples: &[(f64, f64)]) -> f64 {
    samples.iter().map(|&(y, u)| relative_value(q, &[y, u])).fold(0.0, f64::max)
}

/// Relative residual below which a fitted curve is accepted.
const FIT_TOL: f64 = 1e-7;

fn poly_from_coeffs(mons: &[(u32, u32)], coeffs: &[f64]) -> Polynomial {
    let big = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    Polynomial::from_terms(
        2,
        mons.iter()
            .zip(coeffs)
            .filter(|(_, c)| c.abs() > 1e-9 * big)
            .map(|(&(a, b), c)| (vec![a, b], rationalize(c / big, 1e-9))),
    )
}

/// Smallest right singular vector of the column-scaled monomial matrix on `support`.
fn null_vector(samples: &[(f64, f64)], support: &[(u32, u32)]) -> Vec<f64> {
    let mut a = DMatrix::from_fn(samples.len(), support.len(), |r, c| {
        let (y, u) = samples[r];
        y.powi(support[c].0 as i32) * u.powi(support[c].1 as i32)
    });
    let scales: Vec<f64> = (0..support.len()).map(|c| a.column(c).norm().max(f64::MIN_POSITIVE)).collect();
    for (c, s) in scales.iter().enumerate() {
        a.column_mut(c).scale_mut(1.0 / s);
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let k = svd.singular_values.imin();
    (0..support.len()).map(|c| v_t[(k, c)] / scales[c]).collect()
}

/// Sparsest curve obtained by dropping weak monomials from `coeffs` and refitting.
fn sparsify(samples: &[(f64, f64)], mons: &[(u32, u32)], coeffs: &[f64]) -> Option<(Polynomial, f64)> {
    let weight: Vec<f64> = mons
        .iter()
        .zip(coeffs)
        .map(|(&(a, b), c)| {
            let norm: f64 = samples.iter().map(|&(y, u)| (y.powi(a as i32) * u.powi(b as i32)).powi(2)).sum();
            c.abs() * norm.sqrt()
        })
        .collect();
    let top = weight.iter().cloned().fold(0.0, f64::max);
    let mut best: Option<(Polynomial, f64)> = None;
    for cut in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        let support: Vec<(u32, u32)> =
            mons.iter().zip(&weight).filter(|(_, w)| **w > cut * top).map(|(m, _)| *m).collect();
        if support.len() < 2 {
            continue;
        }
        let v = null_vector(samples, &support);
        let Ok((q, _)) = curve_from(poly_from_coeffs(&support, &v)) else { continue };
        let r = relative_residual(&q, samples);
        if r <= FIT_TOL {
            return Some((q, r));
        }
        if best.as_ref().map_or(true, |(_, b)| r < *b) {
            best = Some((q, r));
        }
    }
    best
}

fn interpolate(sys: &EliminationSystem, b: &NashBranch, opts: &EliminateOptions) -> Result<PlaneCurve, ElimError> {
    let budget = sys.degree_budget.to_u64().unwrap_or(u64::MAX);
    let dmax = (opts.cap as u64).min(budget).max(1) as u32;
    let need = monomials(dmax).len();
    let levels = interpolation_levels(b, opts, 2 * need)?;
    let profile = sample_levels(b, &levels, &opts.profile)?;
    let samples: Vec<(f64, f64)> = profile.converged().map(|l| (l.y, l.u)).collect();
    let mut best: Option<(f64, Polynomial)> = None;
    for d in 1..=dmax {
        let mons = monomials(d);
        if samples.len() < mons.len() + 2 {
            return Err(ElimError::TooFewSamples { degree: d, got: samples.len(), need: mons.len() + 2 });
        }
        let fits: Vec<(Polynomial, f64)> = singular_vectors(&samples, &mons)
            .into_iter()
            .take_while(|(s, _)| *s <= opts.sv_tol.sqrt())
            .filter_map(|(_, v)| sparsify(&samples, &mons, &v))
            .collect();
        let mut good: Vec<&Polynomial> = Vec::new();
        for (q, r) in &fits {
            if *r <= FIT_TOL && !good.contains(&q) {
                good.push(q);
            }
        }
        if good.len() > 1 {
            let candidates = good.iter().map(|q| q.display_with(&CURVE_VARS)).collect();
            return Err(ElimError::Ambiguous { degree: d, candidates });
        }
        if let Some(q) = good.first() {
            let (q, degree) = curve_from((*q).clone())?;
            let residual = curve_residual(&q, &samples);
            return Ok(PlaneCurve {
                q_text: q.display_with(&CURVE_VARS),
                factors: vec![CurveFactor { text: q.display_with(&CURVE_VARS), multiplicity: 1, status: FactorStatus::Kept }],
                q,
                degree,
                provenance: Provenance::NumericInterpolation,
                candidates: vec![],
                shared_components: vec![],
                residual: Some(residual),
                budget: sys.degree_budget.to_string(),
                cap_exceeded: false,
                note: None,
            });
        }
        for (q, r) in fits {
            if best.as_ref().map_or(true, |(b, _)| r < *b) {
                best = Some((r, q));
            }
        }
    }
    let Some((rel, q)) = best else {
        return Err(ElimError::ResidualTooLarge { degree: dmax, residual: f64::INFINITY });
    };
    if (dmax as u64) >= budget {
        return Err(ElimError::ResidualTooLarge { degree: dmax, residual: rel });
    }
    let (q, degree) = curve_from(q)?;
    let residual = curve_residual(&q, &samples);
    Ok(PlaneCurve {
        q_text: q.display_with(&CURVE_VARS),
        factors: vec![],
        q,
        degree,
        provenance: Provenance::NumericInterpolation,
        candidates: vec![],
        shared_components: vec![],
        residual: Some(residual),
        budget: sys.degree_budget.to_string(),
        cap_exceeded: true,
        note: Some(format!(
            "curve degree >= cap {dmax}, Lemma 5.8 bound not certified, slopes still valid as candidates"
        )),
    })
}

/// Degree bound on the exponent from a curve of total degree `D`:
/// `1 - 1/D` for even `D`, `1 - 1/(D + 1)` for odd `D`.
pub fn lemma58_bound(curve: &PlaneCurve) -> Result<BigRational, ElimError> {
    degree_bound(curve.degree)
}

pub fn degree_bound(d: u32) -> Result<BigRational, ElimError> {
    if d == 0 {
        return Err(ElimError::DegreeZero);
    }
    let m = if d % 2 == 0 { d } else { d + 1 };
    Ok(BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(m)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentCandidates {
    /// Sorted, distinct values in `(0, 1)`.
    #[serde(serialize_with = "ser_rationals")]
    pub slopes: Vec<BigRational>,
    #[serde(serialize_with = "ser_rational")]
    pub lemma58: BigRational,
}

fn ser_rational<S: serde::Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(q)
}

fn ser_rationals<S: serde::Serializer>(qs: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(qs.iter().map(|q| q.to_string()))
}

impl ExponentCandidates {
    pub fn slopes_f64(&self) -> Vec<f64> {
        self.slopes.iter().map(rational_to_f64).collect()
    }

    /// Whether some slope lies within `tol` of `x`.
    pub fn contains_near(&self, x: f64, tol: f64) -> bool {
        self.slopes_f64().iter().any(|s| (s - x).abs() <= tol)
    }
}

/// Values `(S1 - S) / (2 (N - N1))` over pairs of monomials `u^N y^S`,
/// `u^N1 y^S1` of `Q` with `N != N1`, restricted to `(0, 1)`.
pub fn slope_candidates(curve: &PlaneCurve) -> Result<ExponentCandidates, ElimError> {
    let exps: Vec<(i64, i64)> = curve.q.terms().map(|(e, _)| (e[1] as i64, e[0] as i64)).collect();
    let mut set = BTreeSet::new();
    for (i, &(n, s)) in exps.iter().enumerate() {
        for &(n1, s1) in &exps[i + 1..] {
            if n == n1 {
                continue;
            }
            let v = BigRational::new(BigInt::from(s1 - s), BigInt::from(2 * (n - n1)));
            if v.is_positive() && v < BigRational::one() {
                set.insert(v);
            }
        }
    }
    Ok(ExponentCandidates { slopes: set.into_iter().collect(), lemma58: lemma58_bound(curve)? })
}

/// Builds a curve record directly from a polynomial in `(y, u)`.
pub fn curve_from_poly(q: Polynomial, provenance: Provenance) -> Result<PlaneCurve, ElimError> {
    let (q, degree) = curve_from(q)?;
    Ok(PlaneCurve {
        q_text: q.display_with(&CURVE_VARS),
        factors: vec![],
        q,
        degree,
        provenance,
        candidates: vec![],
        shared_components: vec![],
        residual: None,
        budget: String::new(),
        cap_exceeded: false,
        note: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nash::BranchSpec;
    use crate::poly::{int, parse};

    fn branch_poly(text: &str, n: usize) -> Polynomial {
        parse(text, &branch_var_names(n)).unwrap()
    }

    fn xyu(text: &str, n: usize) -> Polynomial {
        parse(text, &var_names(n, Route::K)).unwrap()
    }

    fn yu(text: &str) -> Polynomial {
        parse(text, &CURVE_VARS).unwrap()
    }

    fn branch(p: &str, n: usize, seed_y: f64) -> NashBranch {
        let spec = BranchSpec { p: p.into(), vars: n, seed_x: vec![0.0; n], seed_y, radius: 1.0 };
        NashBranch::from_spec(&spec).unwrap()
    }

    #[test]
    fn g_by_hand() {
        assert_eq!(build_g(&branch_poly("y - x1^2 - x2^2", 2)).unwrap(), xyu("4*x1^2 + 4*x2^2 - u", 2));
        assert_eq!(build_g(&branch_poly("y - x1^2*x2^2", 2)).unwrap(), xyu("4*x1^2*x2^4 + 4*x1^4*x2^2 - u", 2));
        assert_eq!(build_g(&branch_poly("y", 1)).unwrap(), xyu("-u", 1));
        assert!(build_g(&branch_poly("3", 1)).is_err());
    }

    #[test]
    fn k_route_generators() {
        let s = build_case_i_system(&branch_poly("y - x1^2 - x2^2", 2), Route::K).unwrap();
        assert!(s.generator("K4_1_2").unwrap().is_zero());
        let s = build_case_i_system(&branch_poly("y - x1^2*x2^2", 2), Route::K).unwrap();
        assert_eq!(s.generator("K4_1_2").unwrap(), &xyu("16*x1^3*x2^3*(x1^2 - x2^2)", 2));
        let s = build_case_i_system(&branch_poly("y - x1^3", 1), Route::K).unwrap();
        let names: Vec<&str> = s.generators.iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, ["P", "G"]);
    }

    #[test]
    fn tz_route_generators() {
        let s = build_case_i_system(&branch_poly("y - x1^2 - x2^2", 2), Route::Tz).unwrap();
        let names: Vec<&str> = s.generators.iter().map(|g| g.name.as_str()).collect();
        assert_eq!(names, ["P", "G", "G1", "G2_1", "G2_2", "G3_1", "G3_2", "G4_1_2"]);
        let v = &s.var_names;
        assert_eq!(s.generator("G2_1").unwrap(), &parse("-2*x1 + t1", v).unwrap());
        assert_eq!(s.generator("G3_2").unwrap(), &parse("8*x2 - z2", v).unwrap());
        assert_eq!(s.generator("G4_1_2").unwrap(), &parse("t1*z2 - t2*z1", v).unwrap());
        let k = build_case_i_system_with(&branch_poly("y - x1^2 - x2^2", 2), Route::Tz, true).unwrap();
        assert_eq!(k.generator("K3_1").unwrap(), &parse("8*x1 - z1", v).unwrap());
    }

    #[test]
    fn boundary_systems() {
        let p = branch_poly("y - x1^2 - x2^2", 2);
        let s = build_case_ii_system(&p, &int(1), &[int(0), int(0)], Route::K).unwrap();
        assert_eq!(s.generator("G0").unwrap(), &xyu("x1^2 + x2^2 - 1", 2));
        assert_eq!(s.generators.len(), 3);
        let p3 = branch_poly("y - x1^2 - x2^2 - x3^3", 3);
        let s3 = build_case_ii_system(&p3, &int(1), &[int(0), int(0), int(0)], Route::K).unwrap();
        assert_eq!(s3.generators.iter().filter(|g| g.name.starts_with("K4")).count(), 1);
        let nash = branch_poly("(y + 1)^2 - 1 - x1^2 - x2^2", 2);
        let s = build_case_ii_system(&nash, &int(1), &[int(0), int(0)], Route::K).unwrap();
        assert_eq!(s.degree_budget, BigUint::from(12u32));
        assert!(matches!(
            build_case_ii_system(&branch_poly("y - x1^2", 1), &int(1), &[int(0)], Route::K),
            Err(ElimError::BoundaryNeedsTwoVars)
        ));
    }

    #[test]
    fn paraboloid_curve() {
        let s = build_case_i_system(&branch_poly("y - x1^2 - x2^2", 2), Route::K).unwrap();
        let c = eliminate_to_curve(&s, Method::Resultant, None, None, &EliminateOptions::default()).unwrap();
        assert_eq!(c.q, yu("u - 4*y"));
        assert_eq!(lemma58_bound(&c).unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(slope_candidates(&c).unwrap().slopes, vec![BigRational::new(1.into(), 2.into())]);
    }

    #[test]
    fn axes_curve_after_cleaning() {
        let s = build_case_i_system(&branch_poly("y - x1^2*x2^2", 2), Route::K).unwrap();
        let c = eliminate_to_curve(&s, Method::Resultant, None, None, &EliminateOptions::default()).unwrap();
        assert_eq!(c.q, yu("u^2 - 64*y^3"));
        assert_eq!(c.degree, 3);
        assert_eq!(lemma58_bound(&c).unwrap(), BigRational::new(3.into(), 4.into()));
        assert_eq!(slope_candidates(&c).unwrap().slopes, vec![BigRational::new(3.into(), 4.into())]);
        assert!(c.factors.iter().any(|f| f.text == "y" && f.status == FactorStatus::Monomial));
    }

    #[test]
    fn nash_curve() {
        let s = build_case_i_system(&branch_poly("(y + 1)^2 - 1 - x1^2 - x2^2", 2), Route::K).unwrap();
        let c = eliminate_to_curve(&s, Method::Resultant, None, None, &EliminateOptions::default()).unwrap();
        assert_eq!(c.q, yu("u*(y + 1)^2 - y^2 - 2*y").primitive_integer());
    }

    #[test]
    fn boundary_projection_of_the_paraboloid() {
        let p = branch_poly("y - x1^2 - x2^2", 2);
        let s = build_case_ii_system(&p, &int(1), &[int(0), int(0)], Route::K).unwrap();
        let c = eliminate_to_curve(&s, Method::Resultant, None, None, &EliminateOptions::default()).unwrap();
        assert!(c.candidates.contains(&"y - 1".to_string()));
        assert!(c.candidates.contains(&"u - 4*y".to_string()));
        assert_eq!(c.q.eval_f64(&[1.0, 4.0]), 0.0);
    }

    #[test]
    fn tz_route_agrees_on_the_paraboloid() {
        let s = build_case_i_system(&branch_poly("y - x1^2 - x2^2", 2), Route::Tz).unwrap();
        let b = branch("y - x1^2 - x2^2", 2, 0.0);
        let c = eliminate_to_curve(&s, Method::Resultant, Some(&b), None, &EliminateOptions::default()).unwrap();
        assert_eq!(c.q, yu("u - 4*y"));
    }

    #[test]
    fn interpolation_matches_resultants() {
        let b = branch("y - x1^2*x2^2", 2, 0.0);
        let s = build_case_i_system(b.polynomial(), Route::K).unwrap();
        let mut opts = EliminateOptions { cap: 4, ..Default::default() };
        opts.profile.starts = 8;
        opts.profile.epsilon = 0.1;
        let c = eliminate_to_curve(&s, Method::Interpolate, Some(&b), None, &opts).unwrap();
        assert_eq!(c.q, yu("u^2 - 64*y^3"));
        assert!(c.residual.unwrap() <= 1e-6);
    }

    #[test]
    fn degree_bounds_by_parity() {
        assert_eq!(degree_bound(4).unwrap(), BigRational::new(3.into(), 4.into()));
        assert_eq!(degree_bound(1).unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(degree_bound(3).unwrap(), BigRational::new(3.into(), 4.into()));
    }

    #[test]
    fn slopes_by_enumeration() {
        let c = curve_from_poly(yu("u + y + u*y"), Provenance::SymbolicResultant).unwrap();
        assert_eq!(slope_candidates(&c).unwrap().slopes, vec![BigRational::new(1.into(), 2.into())]);
        let single = curve_from_poly(yu("u*y"), Provenance::SymbolicResultant).unwrap();
        assert!(slope_candidates(&single).unwrap().slopes.is_empty());
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(-1.0 / 64.0, 1e-9), BigRational::new((-1).into(), 64.into()));
        assert_eq!(rationalize(0.75, 1e-9), BigRational::new(3.into(), 4.into()));
    }
}
