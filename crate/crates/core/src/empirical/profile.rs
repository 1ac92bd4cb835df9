//! Sampling the critical profile `u(y) = min { |grad f|^2 : f = y }` over a ball.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EmpiricalError;
use crate::nash::NashBranch;
use crate::region::Region;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Sampling ball centre (defaults to the branch centre).
    pub center: Option<Vec<f64>>,
    /// Sampling ball radius (defaults to the branch radius).
    pub radius: Option<f64>,
    pub epsilon: f64,
    pub levels: usize,
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { center: None, radius: None, epsilon: 0.5, levels: 12, starts: 32, seed: 0, max_iter: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileLevel {
    pub y: f64,
    pub u: f64,
    pub argmin: Vec<f64>,
    /// Starts that reached the level set.
    pub starts_used: usize,
    pub converged: bool,
    /// `|grad h - lambda grad f| / (1 + |grad h|)` at the argmin, `h = |grad f|^2`.
    pub lagrange_residual: f64,
    pub on_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalProfile {
    pub center: Vec<f64>,
    pub radius: f64,
    pub epsilon: f64,
    pub levels: Vec<ProfileLevel>,
    /// Requested levels not attained from any start.
    pub unreachable: Vec<f64>,
}

impl CriticalProfile {
    pub fn converged(&self) -> impl Iterator<Item = &ProfileLevel> {
        self.levels.iter().filter(|l| l.converged)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Levels `+-epsilon * 2^-j`, `j = 1..levels`, for each sign that `f` takes
/// at the starts.
pub fn sample_profile(b: &NashBranch, opts: &ProfileOptions) -> Result<CriticalProfile, EmpiricalError> {
    let ball = sampling_ball(b, opts)?;
    let starts = ball.halton_points(opts.starts, opts.seed);
    let values = start_values(b, &starts)?;
    let mut levels = Vec::new();
    for sign in [1.0, -1.0] {
        if values.iter().any(|v| v * sign > 0.0) {
            levels.extend((1..=opts.levels).map(|j| sign * opts.epsilon * 0.5f64.powi(j as i32)));
        }
    }
    if levels.is_empty() {
        return Err(EmpiricalError::NoLevels { epsilon: opts.epsilon });
    }
    sample_levels(b, &levels, opts)
}

fn sampling_ball(b: &NashBranch, opts: &ProfileOptions) -> Result<Region, EmpiricalError> {
    let center = opts.center.clone().unwrap_or_else(|| b.center().to_vec());
    let radius = opts.radius.unwrap_or(b.radius());
    if center.len() != b.n() || !(radius > 0.0) || b.dist_to_center(&center) + radius > b.radius() * (1.0 + 1e-12) {
        return Err(EmpiricalError::OutsideDomain { center, radius });
    }
    if !(opts.epsilon > 0.0) || opts.starts == 0 {
        return Err(EmpiricalError::Invalid("epsilon and starts must be positive".into()));
    }
    Ok(Region::ball(center, radius))
}

fn start_values(b: &NashBranch, starts: &[Vec<f64>]) -> Result<Vec<f64>, EmpiricalError> {
    Ok(starts.par_iter().map(|x| b.eval(x)).collect::<Result<Vec<_>, _>>()?)
}

/// Minimizes `|grad f|^2` on each level set `{f = y}` in the sampling ball from
/// every start and keeps the smallest value per level (ties: lowest start index).
pub fn sample_levels(b: &NashBranch, levels: &[f64], opts: &ProfileOptions) -> Result<CriticalProfile, EmpiricalError> {
    let ball = sampling_ball(b, opts)?;
    let Region::Ball { center, radius } = ball.clone() else { unreachable!() };
    let starts = ball.halton_points(opts.starts, opts.seed);
    let values = start_values(b, &starts)?;
    let ctx = Ctx { b, center: &center, radius, max_iter: opts.max_iter };
    let jobs: Vec<(usize, usize)> = (0..levels.len()).flat_map(|l| (0..starts.len()).map(move |s| (l, s))).collect();
    let results: Vec<Option<Candidate>> =
        jobs.par_iter().map(|&(l, s)| ctx.optimize(&starts[s], values[s], levels[l])).collect();
    let mut out = Vec::new();
    let mut unreachable = Vec::new();
    for (l, &y) in levels.iter().enumerate() {
        let row = &results[l * starts.len()..(l + 1) * starts.len()];
        let used = row.iter().filter(|c| c.is_some()).count();
        let best = row.iter().flatten().fold(None::<&Candidate>, |acc, c| match acc {
            Some(a) if a.u <= c.u => Some(a),
            _ => Some(c),
        });
        match best {
            Some(c) => out.push(ProfileLevel {
                y,
                u: c.u,
                argmin: c.x.clone(),
                starts_used: used,
                converged: c.converged,
                lagrange_residual: c.lagrange,
                on_boundary: c.on_boundary,
            }),
            None => unreachable.push(y),
        }
    }
    if out.is_empty() {
        return Err(EmpiricalError::NoLevels { epsilon: opts.epsilon });
    }
    Ok(CriticalProfile { center, radius, epsilon: opts.epsilon, levels: out, unreachable })
}

#[derive(Debug, Clone)]
struct Candidate {
    x: Vec<f64>,
    u: f64,
    converged: bool,
    lagrange: f64,
    on_boundary: bool,
}

struct Ctx<'a> {
    b: &'a NashBranch,
    center: &'a [f64],
    radius: f64,
    max_iter: usize,
}

/// A point on the level set with its derivatives.
#[derive(Clone)]
struct State {
    x: Vec<f64>,
    y: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
    active: bool,
}

impl State {
    fn h(&self) -> f64 {
        dot(&self.grad, &self.grad)
    }

    /// `grad |grad f|^2 = 2 H grad f`.
    fn grad_h(&self) -> Vec<f64> {
        let n = self.x.len();
        (0..n).map(|i| 2.0 * (0..n).map(|j| self.hess[i * n + j] * self.grad[j]).sum::<f64>()).collect()
    }
}

impl Ctx<'_> {
    fn sphere(&self, x: &[f64]) -> f64 {
        x.iter().zip(self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() - self.radius * self.radius
    }

    fn outside(&self, x: &[f64]) -> bool {
        self.sphere(x) > 1e-12 * self.radius * self.radius
    }

    fn state(&self, x: Vec<f64>, y: f64, active: bool) -> Option<State> {
        let j = self.b.jet2(&x, y).ok()?;
        Some(State { x, y, grad: j.gv.grad, hess: j.hess, active })
    }

    /// Newton / Gauss-Newton projection onto `{f = target}` (and the sphere when active).
    fn project(&self, from: &[f64], from_y: f64, x: Vec<f64>, target: f64, mut active: bool) -> Option<(Vec<f64>, f64, bool)> {
        let n = x.len();
        let mut x = x;
        if self.outside(&x) {
            active = true;
        }
        let mut y = self.b.eval_from(from, from_y, &self.clip(&x)).ok()?;
        if self.outside(&x) {
            x = self.clip(&x);
        }
        let tol = 1e-10 * target.abs().max(f64::MIN_POSITIVE);
        for _ in 0..60 {
            let sph = self.sphere(&x);
            let level_ok = (y - target).abs() <= tol;
            let sphere_ok = !active || sph.abs() <= 1e-12 * self.radius * self.radius;
            if level_ok && sphere_ok {
                return Some((x, y, active));
            }
            let g = self.b.jet1(&x, y).ok()?.grad;
            let step: Vec<f64> = if active {
                let nrm: Vec<f64> = x.iter().zip(self.center).map(|(a, c)| 2.0 * (a - c)).collect();
                let j = DMatrix::from_fn(2, n, |r, c| if r == 0 { g[c] } else { nrm[c] });
                let res = DVector::from_vec(vec![y - target, sph]);
                let jjt = &j * j.transpose();
                let lam = jjt.lu().solve(&res)?;
                (j.transpose() * lam).iter().map(|v| -v).collect()
            } else {
                let gg = dot(&g, &g);
                if gg == 0.0 {
                    return None;
                }
                g.iter().map(|v| -(y - target) * v / gg).collect()
            };
            let merit = |y: f64, x: &[f64]| {
                let s = if active { self.sphere(x) / (self.radius * self.radius) } else { 0.0 };
                ((y - target) / target.abs()).powi(2) + s * s
            };
            let m0 = merit(y, &x);
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..30 {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
                if !active && self.outside(&trial) {
                    active = true;
                    break;
                }
                if let Ok(yt) = self.b.eval_from(&x, y, &self.clip(&trial)) {
                    if merit(yt, &trial) < m0 {
                        x = self.clip(&trial);
                        y = yt;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved && !active {
                return None;
            }
            if !moved && active && (y - target).abs() > tol {
                // just switched to the two-constraint projection
                continue;
            }
        }
        None
    }

    /// Pulls a point that is marginally outside the ball back onto it.
    fn clip(&self, x: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = x.iter().zip(self.center).map(|(a, c)| a - c).collect();
        let r = norm(&d);
        if r <= self.radius {
            x.to_vec()
        } else {
            self.center.iter().zip(&d).map(|(c, v)| c + v * self.radius / r).collect()
        }
    }

    /// Tangential part of `grad h` and the residual measures.
    fn tangent(&self, s: &mut State) -> (Vec<f64>, Vec<f64>) {
        let gh = s.grad_h();
        let n = s.x.len();
        loop {
            let mut normals = vec![s.grad.clone()];
            if s.active {
                normals.push(s.x.iter().zip(self.center).map(|(a, c)| 2.0 * (a - c)).collect());
            }
            let k = normals.len();
            let nm = DMatrix::from_fn(k, n, |r, c| normals[r][c]);
            let lam = (&nm * nm.transpose()).lu().solve(&(&nm * DVector::from_column_slice(&gh)));
            let Some(lam) = lam else { return (gh.clone(), gh) };
            if s.active && lam[1] > 0.0 {
                s.active = false;
                continue;
            }
            let fit = nm.transpose() * lam;
            let t: Vec<f64> = gh.iter().zip(fit.iter()).map(|(a, b)| a - b).collect();
            return (t, gh);
        }
    }

    fn optimize(&self, start: &[f64], start_y: f64, target: f64) -> Option<Candidate> {
        let (x, y, active) = self.project(start, start_y, start.to_vec(), target, false)?;
        let mut s = self.state(x, y, active)?;
        let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut alpha = 0.0;
        let mut rel = f64::INFINITY;
        let mut lagrange = f64::INFINITY;
        for _ in 0..self.max_iter {
            let (t, gh) = self.tangent(&mut s);
            let tn = norm(&t);
            let ghn = norm(&gh);
            rel = if ghn > 0.0 { tn / ghn } else { 0.0 };
            lagrange = tn / (1.0 + ghn);
            if rel <= 1e-8 || tn == 0.0 {
                break;
            }
            let cap = 0.25 * self.radius / tn;
            alpha = match &prev {
                Some((px, pt)) => {
                    let sx: Vec<f64> = s.x.iter().zip(px).map(|(a, b)| a - b).collect();
                    let st: Vec<f64> = t.iter().zip(pt).map(|(a, b)| a - b).collect();
                    let sy = dot(&sx, &st);
                    if sy > 0.0 { dot(&sx, &sx) / sy } else { 2.0 * alpha }
                }
                None => 0.1 * self.radius / tn,
            }
            .min(cap);
            let h0 = s.h();
            let mut next = None;
            for _ in 0..40 {
                let trial: Vec<f64> = s.x.iter().zip(&t).map(|(a, v)| a - alpha * v).collect();
                if let Some((xn, yn, act)) = self.project(&s.x, s.y, trial, target, s.active) {
                    if let Some(sn) = self.state(xn, yn, act) {
                        if sn.h() <= h0 - 1e-4 * alpha * tn * tn {
                            next = Some(sn);
                            break;
                        }
                    }
                }
                alpha *= 0.5;
            }
            let Some(sn) = next else { break };
            prev = Some((s.x.clone(), t));
            s = sn;
        }
        let on_boundary = s.active || self.sphere(&s.x) >= -1e-9 * self.radius * self.radius;
        Some(Candidate { u: s.h(), converged: rel <= 1e-6, lagrange, on_boundary, x: s.x })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nash::BranchSpec;

    fn branch(p: &str, n: usize) -> NashBranch {
        let spec = BranchSpec { p: p.into(), vars: n, seed_x: vec![0.0; n], seed_y: 0.0, radius: 1.0 };
        NashBranch::from_spec(&spec).unwrap()
    }

    #[test]
    fn paraboloid_profile_is_linear() {
        let b = branch("y - x1^2 - x2^2", 2);
        let p = sample_profile(&b, &ProfileOptions { levels: 6, starts: 8, ..Default::default() }).unwrap();
        assert_eq!(p.levels.len(), 6);
        assert_eq!(p.unreachable, Vec::<f64>::new());
        for l in &p.levels {
            assert!(l.y > 0.0 && l.converged);
            assert!((l.u - 4.0 * l.y).abs() <= 1e-9 * l.u, "{l:?}");
        }
    }

    #[test]
    fn axes_profile_follows_the_three_halves_power() {
        let b = branch("y - x1^2*x2^2", 2);
        let p = sample_profile(&b, &ProfileOptions { epsilon: 0.1, levels: 6, starts: 16, ..Default::default() }).unwrap();
        for l in &p.levels {
            assert!(l.converged, "{l:?}");
            let hand = 8.0 * l.y.abs().powf(1.5);
            assert!((l.u - hand).abs() <= 1e-6 * hand, "{l:?} vs {hand}");
            assert!(l.lagrange_residual <= 1e-6);
        }
    }

    #[test]
    fn odd_power_has_both_signs() {
        let b = branch("y - x1^3", 1);
        let p = sample_profile(&b, &ProfileOptions { levels: 4, starts: 8, ..Default::default() }).unwrap();
        assert_eq!(p.levels.iter().filter(|l| l.y < 0.0).count(), 4);
        for l in &p.levels {
            let hand = 9.0 * l.y.abs().powf(4.0 / 3.0);
            assert!((l.u - hand).abs() <= 1e-9 * hand);
        }
    }

    #[test]
    fn more_starts_never_increase_the_profile() {
        let b = branch("y - x1^2*x2 - x2^3/3 + x1*x2", 2);
        let o = ProfileOptions { epsilon: 0.2, levels: 4, starts: 8, ..Default::default() };
        let p8 = sample_profile(&b, &o).unwrap();
        let p16 = sample_profile(&b, &ProfileOptions { starts: 16, ..o }).unwrap();
        for (a, c) in p8.levels.iter().zip(&p16.levels) {
            assert_eq!(a.y, c.y);
            assert!(c.u <= a.u);
        }
    }
}
