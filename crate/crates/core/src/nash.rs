//! Nash functions given as a branch of `P(x, y) = 0` through a seed point.
//!
//! The branch is evaluated by predictor-corrector continuation along straight
//! segments, and differentiated implicitly.

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::{cauchy_bound, f64_to_rational, isolate_real_roots, parse, NumericPoly, PolyError, Polynomial};

/// Relative fold tolerance: `|dP/dy| > FOLD_TOL * (1 + |grad_x P|)`.
pub const FOLD_TOL: f64 = 1e-10;
/// Default number of continuation steps along a segment.
pub const DEFAULT_PATH_STEPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NashError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("invalid branch specification: {0}")]
    InvalidSpec(String),
    #[error("P does not depend on y")]
    ConstantInY,
    #[error("no real root of P(seed_x, y) near seed_y = {seed_y} (nearest {nearest:?})")]
    SeedNotOnBranch { seed_y: f64, nearest: Option<f64> },
    #[error("branch fold: dP/dy vanishes at path parameter t = {t} (x = {x:?})")]
    Fold { t: f64, x: Vec<f64> },
    #[error("Newton corrector diverged at path parameter t = {t} after exhausting step halvings")]
    NewtonDiverged { t: f64 },
    #[error("point {x:?} lies outside the branch domain (distance {dist} from the centre, radius {radius})")]
    OutsideDomain { x: Vec<f64>, dist: f64, radius: f64 },
    #[error("point has dimension {got}, branch has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// On-disk branch description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSpec {
    #[serde(rename = "P")]
    pub p: String,
    pub vars: usize,
    pub seed_x: Vec<f64>,
    pub seed_y: f64,
    pub radius: f64,
}

/// `f(x)`, `grad f(x)` and `|grad f(x)|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientValue {
    pub value: f64,
    pub grad: Vec<f64>,
    pub norm_sq: f64,
}

impl GradientValue {
    fn new(value: f64, grad: Vec<f64>) -> Self {
        let norm_sq = grad.iter().map(|g| g * g).sum();
        GradientValue { value, grad, norm_sq }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

/// Value, gradient and row-major Hessian of the branch at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub gv: GradientValue,
    pub hess: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Derivatives {
    p: NumericPoly,
    px: Vec<NumericPoly>,
    py: NumericPoly,
    pxx: Vec<NumericPoly>,
    pxy: Vec<NumericPoly>,
    pyy: NumericPoly,
}

/// A branch `y = f(x)` of `P(x, y) = 0` through `(seed_x, seed_y)`, defined on
/// the closed ball of the given radius around `seed_x`.
#[derive(Debug, Clone)]
pub struct NashBranch {
    poly: Polynomial,
    text: String,
    n: usize,
    seed_x: Vec<f64>,
    seed_y: f64,
    radius: f64,
    path_steps: usize,
    max_halvings: u32,
    d: Derivatives,
    /// `P = c*y + h(x)`: coefficient `c` and `h`.
    explicit: Option<(f64, NumericPoly)>,
}

/// Variable names `x1..xn, y` used for branch polynomials.
pub fn branch_var_names(n: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    v.push("y".into());
    v
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

impl NashBranch {
    pub fn from_spec(spec: &BranchSpec) -> Result<Self, NashError> {
        if spec.vars == 0 {
            return Err(NashError::InvalidSpec("vars must be at least 1".into()));
        }
        if spec.seed_x.len() != spec.vars {
            return Err(NashError::InvalidSpec(format!(
                "seed_x has {} coordinates, expected {}",
                spec.seed_x.len(),
                spec.vars
            )));
        }
        let poly = parse(&spec.p, &branch_var_names(spec.vars)).map_err(PolyError::from)?;
        Self::new(poly, spec.seed_x.clone(), spec.seed_y, spec.radius)
    }

    pub fn from_json(text: &str) -> Result<Self, NashError> {
        let spec: BranchSpec = serde_json::from_str(text).map_err(|e| NashError::InvalidSpec(e.to_string()))?;
        Self::from_spec(&spec)
    }

    /// Builds a branch from `P` in the variables `x1..xn, y` (y last), polishing the seed.
    pub fn new(poly: Polynomial, seed_x: Vec<f64>, seed_y: f64, radius: f64) -> Result<Self, NashError> {
        let n = poly.nvars().checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
            NashError::InvalidSpec("P needs at least one x variable and y".into())
        })?;
        if seed_x.len() != n {
            return Err(NashError::DimensionMismatch { expected: n, got: seed_x.len() });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(NashError::InvalidSpec(format!("radius must be positive, got {radius}")));
        }
        if seed_x.iter().chain(std::iter::once(&seed_y)).any(|v| !v.is_finite()) {
            return Err(NashError::InvalidSpec("seed coordinates must be finite".into()));
        }
        if poly.is_zero() {
            return Err(PolyError::ZeroPolynomial.into());
        }
        if !poly.uses_var(n) {
            return Err(NashError::ConstantInY);
        }
        let py = poly.d(n);
        let d = Derivatives {
            p: NumericPoly::new(&poly),
            px: (0..n).map(|i| NumericPoly::new(&poly.d(i))).collect(),
            py: NumericPoly::new(&py),
            pxx: (0..n * n).map(|k| NumericPoly::new(&poly.d(k / n).d(k % n))).collect(),
            pxy: (0..n).map(|i| NumericPoly::new(&poly.d(i).d(n))).collect(),
            pyy: NumericPoly::new(&py.d(n)),
        };
        let coeffs = poly.to_univariate(n);
        let explicit = (coeffs.len() == 2 && coeffs[1].is_constant())
            .then(|| (crate::poly::rational_to_f64(&coeffs[1].constant_value().expect("constant")), NumericPoly::new(&coeffs[0])));
        let text = poly.display_with(&branch_var_names(n));
        let mut b = NashBranch {
            poly,
            text,
            n,
            seed_x,
            seed_y,
            radius,
            path_steps: DEFAULT_PATH_STEPS,
            max_halvings: 20,
            d,
            explicit,
        };
        b.seed_y = b.polish_seed(seed_y)?;
        Ok(b)
    }

    fn polish_seed(&self, y0: f64) -> Result<f64, NashError> {
        let y = match &self.explicit {
            Some((c, h)) => -h.eval(&self.xy(&self.seed_x, 0.0)) / c,
            None => {
                let mut q = self.poly.clone();
                for (i, &xi) in self.seed_x.iter().enumerate() {
                    q = q.substitute(i, &f64_to_rational(xi)?);
                }
                if !q.uses_var(self.n) {
                    return Err(NashError::SeedNotOnBranch { seed_y: y0, nearest: None });
                }
                let bound = cauchy_bound(&q)?;
                let roots = isolate_real_roots(&q, -bound, bound, 1e-12 * (1.0 + bound))?;
                let nearest = roots
                    .iter()
                    .map(|r| r.midpoint())
                    .min_by(|a, b| (a - y0).abs().total_cmp(&(b - y0).abs()))
                    .ok_or(NashError::SeedNotOnBranch { seed_y: y0, nearest: None })?;
                self.newton_polish(&self.seed_x, nearest)
            }
        };
        if (y - y0).abs() > 1e-3 * (1.0 + y0.abs()) {
            return Err(NashError::SeedNotOnBranch { seed_y: y0, nearest: Some(y) });
        }
        let px = self.px_at(&self.seed_x, y);
        let py = self.d.py.eval(&self.xy(&self.seed_x, y));
        if py.abs() <= FOLD_TOL * (1.0 + norm(&px)) {
            return Err(NashError::Fold { t: 0.0, x: self.seed_x.clone() });
        }
        Ok(y)
    }

    fn newton_polish(&self, x: &[f64], mut y: f64) -> f64 {
        for _ in 0..50 {
            let xy = self.xy(x, y);
            let py = self.d.py.eval(&xy);
            if py == 0.0 {
                break;
            }
            let step = self.d.p.eval(&xy) / py;
            y -= step;
            if step.abs() <= 1e-16 * (1.0 + y.abs()) {
                break;
            }
        }
        y
    }

    /// Overrides the default continuation step count.
    pub fn with_path_steps(mut self, steps: usize) -> Self {
        self.path_steps = steps.max(1);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn seed_x(&self) -> &[f64] {
        &self.seed_x
    }

    pub fn seed_y(&self) -> f64 {
        self.seed_y
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Centre of the domain ball (the seed point).
    pub fn center(&self) -> &[f64] {
        &self.seed_x
    }

    /// Whether `P = c*y + h(x)`, in which case f is evaluated in closed form.
    pub fn is_explicit(&self) -> bool {
        self.explicit.is_some()
    }

    /// Total degree of P, the degree of the Nash function at the seed.
    pub fn degree_at(&self) -> u32 {
        self.poly.total_degree().finite().expect("P is nonzero")
    }

    pub fn dist_to_center(&self, x: &[f64]) -> f64 {
        dist(x, &self.seed_x)
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.n && self.dist_to_center(x) <= self.radius * (1.0 + 1e-12)
    }

    fn check_point(&self, x: &[f64]) -> Result<(), NashError> {
        if x.len() != self.n {
            return Err(NashError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        if !self.in_domain(x) {
            return Err(NashError::OutsideDomain { x: x.to_vec(), dist: self.dist_to_center(x), radius: self.radius });
        }
        Ok(())
    }

    fn xy(&self, x: &[f64], y: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n + 1);
        v.extend_from_slice(x);
        v.push(y);
        v
    }

    fn px_at(&self, x: &[f64], y: f64) -> Vec<f64> {
        let xy = self.xy(x, y);
        self.d.px.iter().map(|p| p.eval(&xy)).collect()
    }

    /// `P(x, y)`.
    pub fn residual(&self, x: &[f64], y: f64) -> f64 {
        self.d.p.eval(&self.xy(x, y))
    }

    /// Scale of `P` at `(x, y)`: the sum of absolute term values.
    pub fn residual_scale(&self, x: &[f64], y: f64) -> f64 {
        self.d.p.abs_term_sum(&self.xy(x, y))
    }

    /// `f(x)` with the default step count.
    pub fn eval(&self, x: &[f64]) -> Result<f64, NashError> {
        self.branch_eval(x, self.path_steps)
    }

    /// `f(x)` by continuation from the seed along the straight segment.
    pub fn branch_eval(&self, x: &[f64], path_steps: usize) -> Result<f64, NashError> {
        self.check_point(x)?;
        if let Some((c, h)) = &self.explicit {
            return Ok(-h.eval(&self.xy(x, 0.0)) / c);
        }
        self.track(&self.seed_x, self.seed_y, x, path_steps.max(1))
    }

    /// `f(to)` continued from a known branch point `(from, from_y)`.
    /// The step count scales with the segment length.
    pub fn eval_from(&self, from: &[f64], from_y: f64, to: &[f64]) -> Result<f64, NashError> {
        self.check_point(to)?;
        if let Some((c, h)) = &self.explicit {
            return Ok(-h.eval(&self.xy(to, 0.0)) / c);
        }
        let len = dist(from, to);
        let steps = ((self.path_steps as f64 * len / self.radius).ceil() as usize).clamp(1, self.path_steps);
        self.track(from, from_y, to, steps)
    }

    /// `f` at the last vertex of a polyline that starts at the seed.
    pub fn eval_along(&self, path: &[Vec<f64>]) -> Result<f64, NashError> {
        let mut x = self.seed_x.clone();
        let mut y = self.seed_y;
        for p in path {
            self.check_point(p)?;
            y = match &self.explicit {
                Some((c, h)) => -h.eval(&self.xy(p, 0.0)) / c,
                None => self.track(&x, y, p, self.path_steps)?,
            };
            x = p.clone();
        }
        Ok(y)
    }

    fn track(&self, from: &[f64], from_y: f64, to: &[f64], steps: usize) -> Result<f64, NashError> {
        let dir: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
        let at = |t: f64| -> Vec<f64> { from.iter().zip(&dir).map(|(a, v)| a + t * v).collect() };
        let h_max = 1.0 / steps as f64;
        let mut h = h_max;
        let mut t = 0.0f64;
        let mut y = from_y;
        let h_min = h_max * 0.5f64.powi(self.max_halvings as i32);
        while t < 1.0 {
            h = h.min(1.0 - t);
            let xt = at(t);
            let xy = self.xy(&xt, y);
            let px: Vec<f64> = self.d.px.iter().map(|p| p.eval(&xy)).collect();
            let py = self.d.py.eval(&xy);
            if py.abs() <= FOLD_TOL * (1.0 + norm(&px)) {
                return Err(NashError::Fold { t, x: xt });
            }
            let slope = -px.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() / py;
            let y_pred = y + h * slope;
            let t_new = if t + h >= 1.0 - 1e-15 { 1.0 } else { t + h };
            let x_new = at(t_new);
            let mut yc = y_pred;
            let mut converged = false;
            for _ in 0..8 {
                let xy = self.xy(&x_new, yc);
                let pyc = self.d.py.eval(&xy);
                let pxc: Vec<f64> = self.d.px.iter().map(|p| p.eval(&xy)).collect();
                if pyc.abs() <= FOLD_TOL * (1.0 + norm(&pxc)) {
                    break;
                }
                let step = self.d.p.eval(&xy) / pyc;
                yc -= step;
                if !yc.is_finite() {
                    break;
                }
                if step.abs() <= 1e-14 * (1.0 + yc.abs()) {
                    converged = true;
                    break;
                }
            }
            let close = (yc - y_pred).abs() <= 0.3 * (h * slope).abs() + 1e-7 * (1.0 + y.abs());
            if converged && close {
                t = t_new;
                y = yc;
                h = (2.0 * h).min(h_max);
            } else {
                h *= 0.5;
                if h < h_min || t + h == t {
                    return Err(NashError::NewtonDiverged { t });
                }
            }
        }
        Ok(self.newton_polish(to, y))
    }

    /// Gradient at `x` given the branch value `y = f(x)`.
    pub fn jet1(&self, x: &[f64], y: f64) -> Result<GradientValue, NashError> {
        let xy = self.xy(x, y);
        let px: Vec<f64> = self.d.px.iter().map(|p| p.eval(&xy)).collect();
        let py = self.d.py.eval(&xy);
        if py.abs() <= FOLD_TOL * (1.0 + norm(&px)) {
            return Err(NashError::Fold { t: 1.0, x: x.to_vec() });
        }
        Ok(GradientValue::new(y, px.iter().map(|p| -p / py).collect()))
    }

    /// Gradient and Hessian at `x` given the branch value `y = f(x)`.
    pub fn jet2(&self, x: &[f64], y: f64) -> Result<Jet2, NashError> {
        let gv = self.jet1(x, y)?;
        let xy = self.xy(x, y);
        let n = self.n;
        let py = self.d.py.eval(&xy);
        let pyy = self.d.pyy.eval(&xy);
        let pxy: Vec<f64> = self.d.pxy.iter().map(|p| p.eval(&xy)).collect();
        let g = &gv.grad;
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let pij = self.d.pxx[i * n + j].eval(&xy);
                let v = -(pij + pxy[i] * g[j] + pxy[j] * g[i] + pyy * g[i] * g[j]) / py;
                hess[i * n + j] = v;
                hess[j * n + i] = v;
            }
        }
        Ok(Jet2 { gv, hess })
    }

    /// `f(x)` and its gradient, evaluating from the seed.
    pub fn branch_gradient(&self, x: &[f64]) -> Result<GradientValue, NashError> {
        let y = self.eval(x)?;
        self.jet1(x, y)
    }
}

/// Gradient minimum over grid samples whose value falls in `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelBin {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    pub min_grad: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalScan {
    /// Distinct critical values found inside the window (including 0 if found).
    pub critical_values: Vec<f64>,
    /// Nonzero critical values inside the window.
    pub flagged: Vec<f64>,
    pub epsilon: f64,
    pub window: f64,
    pub bins: Vec<LevelBin>,
    pub starts: usize,
}

/// Gradient norm below which a point is treated as critical.
pub const CRITICAL_GRAD_TOL: f64 = 1e-8;

/// Scans the domain for critical values of f in `(-eps0, eps0)` and suggests
/// `epsilon` = half the distance from 0 to the nearest nonzero one (`eps0` if none).
/// `grid` is the number of samples per axis.
pub fn critical_value_scan(b: &NashBranch, eps0: f64, grid: usize) -> Result<CriticalScan, NashError> {
    if !(eps0 > 0.0) {
        return Err(NashError::InvalidSpec(format!("window half-width must be positive, got {eps0}")));
    }
    let n = b.n();
    let grid = grid.max(2);
    // Keep the total sample count bounded in higher dimension.
    let per_axis = {
        let mut g = grid;
        while g > 2 && (g as f64).powi(n as i32) > 20_000.0 {
            g -= 1;
        }
        g
    };
    let mut points = Vec::new();
    let total = per_axis.pow(n as u32);
    for k in 0..total {
        let mut rem = k;
        let mut x = Vec::with_capacity(n);
        for i in 0..n {
            let idx = rem % per_axis;
            rem /= per_axis;
            let s = -1.0 + 2.0 * idx as f64 / (per_axis - 1) as f64;
            x.push(b.center()[i] + b.radius() * s);
        }
        if b.in_domain(&x) {
            points.push(x);
        }
    }
    let samples: Vec<(Vec<f64>, GradientValue)> = points
        .into_par_iter()
        .map(|x| {
            let gv = b.branch_gradient(&x)?;
            Ok((x, gv))
        })
        .collect::<Result<Vec<_>, NashError>>()?;

    let nbins = grid;
    let width = 2.0 * eps0 / nbins as f64;
    let mut bins: Vec<LevelBin> = (0..nbins)
        .map(|k| LevelBin { lo: -eps0 + k as f64 * width, hi: -eps0 + (k + 1) as f64 * width, samples: 0, min_grad: None })
        .collect();
    for (_, gv) in &samples {
        if gv.value.abs() < eps0 {
            let k = (((gv.value + eps0) / width) as usize).min(nbins - 1);
            let bin = &mut bins[k];
            bin.samples += 1;
            let g = gv.norm();
            bin.min_grad = Some(bin.min_grad.map_or(g, |m: f64| m.min(g)));
        }
    }

    let found: Vec<Option<f64>> =
        samples.par_iter().map(|(x, gv)| levenberg_marquardt(b, x.clone(), gv.value)).collect();
    let mut values: Vec<f64> = found.into_iter().flatten().filter(|v| v.abs() < eps0).collect();
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * (1.0 + b.abs()));
    let zero_tol = 1e-6 * eps0;
    let flagged: Vec<f64> = values.iter().copied().filter(|v| v.abs() > zero_tol).collect();
    let epsilon = flagged.iter().map(|v| 0.5 * v.abs()).fold(eps0, f64::min);
    Ok(CriticalScan { critical_values: values, flagged, epsilon, window: eps0, bins, starts: samples.len() })
}

/// Minimizes `|grad f|^2` from `x`; returns the critical value if `|grad f|` reaches the tolerance.
fn levenberg_marquardt(b: &NashBranch, mut x: Vec<f64>, mut y: f64) -> Option<f64> {
    let n = b.n();
    let mut mu = 1e-3;
    let mut jet = b.jet2(&x, y).ok()?;
    for _ in 0..200 {
        let gnorm = jet.gv.norm();
        if gnorm <= CRITICAL_GRAD_TOL {
            return Some(y);
        }
        let h = DMatrix::from_row_slice(n, n, &jet.hess);
        let g = DVector::from_column_slice(&jet.gv.grad);
        let a = h.transpose() * &h + DMatrix::identity(n, n) * mu;
        let rhs = -(h.transpose() * &g);
        let step = a.lu().solve(&rhs)?;
        let x_new: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
        let accepted = b
            .in_domain(&x_new)
            .then(|| b.eval_from(&x, y, &x_new).ok())
            .flatten()
            .and_then(|y_new| b.jet2(&x_new, y_new).ok().map(|j| (y_new, j)))
            .filter(|(_, j)| j.gv.norm() < gnorm);
        match accepted {
            Some((y_new, j)) => {
                x = x_new;
                y = y_new;
                jet = j;
                mu = (mu / 3.0).max(1e-12);
            }
            None => {
                mu *= 4.0;
                if mu > 1e12 {
                    return None;
                }
            }
        }
    }
    None
}

/// Exact value of `x` as a rational, for symbolic substitution.
pub fn exact_point(x: &[f64]) -> Result<Vec<BigRational>, NashError> {
    x.iter().map(|&v| f64_to_rational(v).map_err(NashError::from)).collect()
}
