//! Normalized gradient flow toward the zero set, with checks of the
//! length bound, the Kurdyka-Łojasiewicz inequality and the U-region.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nash::{GradientValue, NashBranch, NashError};
use crate::region::Region;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error(transparent)]
    Nash(#[from] NashError),
    #[error("start point lies on the zero set (f = {value})")]
    StartOnV { value: f64 },
    #[error("start point is critical (|grad f| = {grad})")]
    StartAtCritical { grad: f64 },
    #[error("start point {x:?} lies outside the region")]
    StartOutside { x: Vec<f64> },
    #[error("sample {x:?} lies on the zero set")]
    SampleOnV { x: Vec<f64> },
    #[error("exponent must lie in [0, 1) and the constant must be positive (rho = {rho}, c = {c})")]
    BadExponent { rho: f64, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    ReachedZeroLevel,
    LeftDomain,
    StepUnderflow,
    MaxLength,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Stop once `|f| <= stop_tol`.
    pub stop_tol: f64,
    /// Also stop once the Newton distance `|f| / |grad f|` drops below this.
    pub stop_newton_dist: Option<f64>,
    pub max_length: f64,
    /// Local error tolerance per unit arc length.
    pub tol: f64,
    /// Step cap as a fraction of `|f| / |grad f|`.
    pub kappa: f64,
    pub max_steps: usize,
    /// Keep every accepted point (otherwise only the endpoints).
    pub record: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            stop_tol: 1e-12,
            stop_newton_dist: None,
            max_length: f64::INFINITY,
            tol: 1e-10,
            kappa: 0.1,
            max_steps: 200_000,
            record: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub arc_length: f64,
    pub terminal: Terminal,
    pub start_value: f64,
    pub end_value: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn start(&self) -> &[f64] {
        &self.points[0]
    }

    pub fn end(&self) -> &[f64] {
        self.points.last().expect("nonempty trajectory")
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn axpy(x: &[f64], h: f64, ks: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = x.to_vec();
    for (k, c) in ks {
        for (o, v) in out.iter_mut().zip(k.iter()) {
            *o += h * c * v;
        }
    }
    out
}

// Runge-Kutta-Fehlberg 4(5) tableau.
const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 4.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const B5: [f64; 6] = [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];
const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0];

struct Field<'a> {
    b: &'a NashBranch,
    sign: f64,
}

impl Field<'_> {
    /// Unit descent direction at `z`, continuing the branch from `(x, y)`.
    fn at(&self, x: &[f64], y: f64, z: &[f64]) -> Option<Vec<f64>> {
        let yz = self.b.eval_from(x, y, z).ok()?;
        let gv = self.b.jet1(z, yz).ok()?;
        let g = gv.norm();
        (g > 0.0 && g.is_finite()).then(|| gv.grad.iter().map(|v| -self.sign * v / g).collect())
    }
}

/// Integrates `x' = -sign(f(x0)) grad f / |grad f|` from `x0` by arc length
/// until `|f|` reaches the stopping tolerance or the path leaves `region`.
pub fn flow(b: &NashBranch, x0: &[f64], region: &Region, opts: &FlowOptions) -> Result<Trajectory, FlowError> {
    if !region.contains(x0) || !b.in_domain(x0) {
        return Err(FlowError::StartOutside { x: x0.to_vec() });
    }
    let gv0 = b.branch_gradient(x0)?;
    if gv0.value == 0.0 || gv0.value.abs() <= opts.stop_tol {
        return Err(FlowError::StartOnV { value: gv0.value });
    }
    if !(gv0.norm() > f64::MIN_POSITIVE) {
        return Err(FlowError::StartAtCritical { grad: gv0.norm() });
    }
    let sign = gv0.value.signum();
    let field = Field { b, sign };
    let mut x = x0.to_vec();
    let mut gv = gv0.clone();
    let mut points = vec![x.clone()];
    let mut values = vec![gv.value];
    let mut arc = 0.0;
    let mut h = (opts.kappa * gv.value.abs() / gv.norm()).min(0.1 * region.outer_radius());
    let mut steps = 0;
    let finish = |mut points: Vec<Vec<f64>>, mut values: Vec<f64>, x: Vec<f64>, f: f64, arc, terminal, steps| {
        if points.last() != Some(&x) {
            points.push(x);
            values.push(f);
        }
        Trajectory { points, values, arc_length: arc, terminal, start_value: gv0.value, end_value: f, steps }
    };
    loop {
        let done = |gv: &GradientValue| {
            gv.value.abs() <= opts.stop_tol
                || opts.stop_newton_dist.is_some_and(|d| gv.value.abs() / gv.norm() <= d)
        };
        if done(&gv) {
            return Ok(finish(points, values, x, gv.value, arc, Terminal::ReachedZeroLevel, steps));
        }
        if arc >= opts.max_length || steps >= opts.max_steps {
            return Ok(finish(points, values, x, gv.value, arc, Terminal::MaxLength, steps));
        }
        let cap = opts.kappa * gv.value.abs() / gv.norm();
        h = h.min(cap).min(opts.max_length - arc);
        let h_min = 1e-14 * (1.0 + norm(&x));
        let floor = 8.0 * f64::EPSILON * (1.0 + norm(&x));
        let accepted = loop {
            if h < h_min {
                break None;
            }
            match rkf_step(&field, &x, gv.value, h) {
                Some((x5, err)) if err <= opts.tol * h + floor => {
                    if !region.contains(&x5) || !b.in_domain(&x5) {
                        let room = region.dist_to_complement(&x).min(b.radius() - b.dist_to_center(&x));
                        if room <= 1e-9 * region.outer_radius() {
                            return Ok(finish(points, values, x, gv.value, arc, Terminal::LeftDomain, steps));
                        }
                        h *= 0.5;
                        continue;
                    }
                    let new = b.eval_from(&x, gv.value, &x5).ok().and_then(|y| b.jet1(&x5, y).ok());
                    match new {
                        Some(g) if sign * g.value < sign * gv.value && (sign * g.value > 0.0 || g.value == 0.0) => {
                            let grow = if err > 0.0 { (0.9 * ((opts.tol * h + floor) / err).powf(0.25)).clamp(0.2, 4.0) } else { 4.0 };
                            break Some((x5, g, grow));
                        }
                        _ => h *= 0.5,
                    }
                }
                Some((_, err)) => h *= (0.9 * (opts.tol * h / err).powf(0.25)).clamp(0.1, 0.5),
                None => h *= 0.5,
            }
        };
        let Some((x5, g, grow)) = accepted else {
            return Ok(finish(points, values, x, gv.value, arc, Terminal::StepUnderflow, steps));
        };
        arc += dist(&x, &x5);
        steps += 1;
        x = x5;
        gv = g;
        if opts.record {
            points.push(x.clone());
            values.push(gv.value);
        }
        h *= grow;
    }
}

fn rkf_step(field: &Field, x: &[f64], y: f64, h: f64) -> Option<(Vec<f64>, f64)> {
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(6);
    for row in A.iter() {
        let coeffs: Vec<(&[f64], f64)> = k.iter().zip(row.iter()).map(|(v, c)| (v.as_slice(), *c)).collect();
        let z = axpy(x, h, &coeffs);
        k.push(field.at(x, y, &z)?);
    }
    let c5: Vec<(&[f64], f64)> = k.iter().zip(B5.iter()).map(|(v, c)| (v.as_slice(), *c)).collect();
    let c4: Vec<(&[f64], f64)> = k.iter().zip(B4.iter()).map(|(v, c)| (v.as_slice(), *c)).collect();
    let x5 = axpy(x, h, &c5);
    let x4 = axpy(x, h, &c4);
    Some((x5.clone(), dist(&x5, &x4)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The flow did not reach the zero level, so the bounds do not apply.
    Inapplicable,
    /// The start point lies outside the U-region; reported for information only.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthCheck {
    pub length: f64,
    pub dist_to_v: f64,
    pub upper_bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub in_u_region: bool,
    pub verdict: Verdict,
}

fn check_constants(rho: f64, c: f64) -> Result<(), FlowError> {
    if !(0.0..1.0).contains(&rho) || !(c > 0.0) {
        return Err(FlowError::BadExponent { rho, c });
    }
    Ok(())
}

/// Length bound for a trajectory:
/// `dist(x0, V) <= length <= |f(x0)|^(1 - rho) / ((1 - rho) c)`.
/// `dist_to_v` is an estimate of `dist(x0, V)`.
pub fn check_length_bound(
    traj: &Trajectory,
    rho: f64,
    c: f64,
    dist_to_v: f64,
    in_u_region: bool,
    rel_tol: f64,
) -> Result<LengthCheck, FlowError> {
    check_constants(rho, c)?;
    let length = traj.arc_length;
    let upper_bound = traj.start_value.abs().powf(1.0 - rho) / ((1.0 - rho) * c);
    let lower_ok = dist_to_v <= length * (1.0 + rel_tol);
    let upper_ok = length <= upper_bound * (1.0 + rel_tol);
    let verdict = if traj.terminal != Terminal::ReachedZeroLevel {
        Verdict::Inapplicable
    } else if !in_u_region {
        Verdict::Informational
    } else if lower_ok && upper_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(LengthCheck {
        length,
        dist_to_v,
        upper_bound,
        lower_ok,
        upper_ok,
        lower_margin: if length > 0.0 { (length - dist_to_v) / length } else { 0.0 },
        upper_margin: (upper_bound - length) / upper_bound,
        in_u_region,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlCheck {
    /// Minimum over samples of `(1 - rho) |f|^(-rho) |grad f| / c`.
    pub min_value: f64,
    pub argmin: Vec<f64>,
    pub samples: usize,
    pub pass: bool,
}

/// Checks `|grad (psi o f)| >= 1` with `psi(s) = s^(1 - rho) / ((1 - rho) c)`.
pub fn check_kl(b: &NashBranch, samples: &[Vec<f64>], rho: f64, c: f64) -> Result<KlCheck, FlowError> {
    check_constants(rho, c)?;
    let mut min_value = f64::INFINITY;
    let mut argmin = Vec::new();
    for x in samples {
        let gv = b.branch_gradient(x)?;
        if gv.value == 0.0 {
            return Err(FlowError::SampleOnV { x: x.clone() });
        }
        let v = (1.0 - rho) * gv.value.abs().powf(-rho) * gv.norm() / ((1.0 - rho) * c);
        if v < min_value {
            min_value = v;
            argmin = x.clone();
        }
    }
    Ok(KlCheck { min_value, argmin, samples: samples.len(), pass: min_value >= 1.0 - 1e-9 })
}

/// Whether `|f(x)|^(1 - rho) / (c (1 - rho)) < dist(x, complement of region)`.
pub fn in_u_region(b: &NashBranch, x: &[f64], region: &Region, rho: f64, c: f64) -> Result<bool, FlowError> {
    check_constants(rho, c)?;
    let f = b.eval(x)?;
    Ok(f.abs().powf(1.0 - rho) / (c * (1.0 - rho)) < region.dist_to_complement(x))
}
