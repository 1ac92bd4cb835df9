//! Estimating `alpha` in `|f(x)| >= c dist(x, V)^alpha` from the lower envelope
//! of `|f|` over distance strata.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EmpiricalError;
use crate::flow::{flow, FlowOptions, Terminal};
use crate::nash::NashBranch;
use crate::region::{random_unit_vector, Region};
use crate::vsample::{build_v_sample, VSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceOptions {
    pub v_sample_size: usize,
    pub directions: usize,
    pub scales: usize,
    /// Extra query anchors drawn from the zero-set sample.
    pub v_anchors: usize,
    pub strata: usize,
    pub seed: u64,
    /// Fit `|grad f|` instead of `|f|`.
    pub use_gradient: bool,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            v_sample_size: 10_000,
            directions: 256,
            scales: 40,
            v_anchors: 16,
            strata: 16,
            seed: 0,
            use_gradient: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub dist: f64,
    pub value: f64,
    pub queries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceFit {
    pub alpha_hat: f64,
    /// Largest constant with `value >= c dist^alpha_hat` over the envelope.
    pub c_hat: f64,
    pub residual: f64,
    pub strata: Vec<Stratum>,
    pub spacing: f64,
    pub v_sample_size: usize,
    pub queries: usize,
}

struct Query {
    x: Vec<f64>,
    d: f64,
    value: f64,
    refined: bool,
}

/// Builds a zero-set sample and fits the distance exponent.
pub fn fit_distance_exponent(b: &NashBranch, region: &Region, opts: &DistanceOptions) -> Result<DistanceFit, EmpiricalError> {
    region.validate(b.n())?;
    let v = build_v_sample(b, region, opts.v_sample_size, opts.seed)?;
    fit_distance_exponent_with(b, region, &v, opts)
}

/// Fits the distance exponent against a prebuilt zero-set sample.
pub fn fit_distance_exponent_with(
    b: &NashBranch,
    region: &Region,
    v: &VSample,
    opts: &DistanceOptions,
) -> Result<DistanceFit, EmpiricalError> {
    let n = b.n();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_d157);
    let center = region.center();
    let r = region.outer_radius();
    let mut anchors = vec![center];
    if !v.is_empty() {
        let step = (v.len() / opts.v_anchors.max(1)).max(1);
        anchors.extend(v.points().iter().step_by(step).take(opts.v_anchors).cloned());
    }
    let dirs: Vec<Vec<f64>> = (0..opts.directions).map(|_| random_unit_vector(n, &mut rng)).collect();
    let s_min = (10.0 * v.spacing).max(1e-6 * r);
    let s_max = 0.5 * r;
    if s_min >= s_max {
        return Err(EmpiricalError::TooSparse { spacing: v.spacing, strata: 0 });
    }
    let scales: Vec<f64> = (0..opts.scales)
        .map(|k| s_max * (s_min / s_max).powf(k as f64 / (opts.scales.max(2) - 1) as f64))
        .collect();
    let mut queries = Vec::new();
    for a in &anchors {
        for w in &dirs {
            for s in &scales {
                let x: Vec<f64> = a.iter().zip(w).map(|(p, q)| p + s * q).collect();
                if region.contains(&x) && b.in_domain(&x) {
                    queries.push(x);
                }
            }
        }
    }
    let mut samples: Vec<Query> = queries
        .into_par_iter()
        .filter_map(|x| {
            let d = v.dist(&x);
            if d < s_min {
                return None;
            }
            let value = if opts.use_gradient { b.branch_gradient(&x).ok()?.norm() } else { b.eval(&x).ok()?.abs() };
            Some(Query { x, d, value, refined: false })
        })
        .collect();
    let hi = samples.iter().map(|q| q.d).fold(0.0f64, f64::max);
    let nb = opts.strata.max(4);
    let span = (hi / s_min).ln();
    let bin = |d: f64| (((d / s_min).ln() / span * nb as f64).max(0.0) as usize).min(nb - 1);
    // The sample distance overestimates dist(x, V) where V is sparsely sampled;
    // flow endpoints from x and from a small cloud around it give further upper
    // bounds. Refine envelope
    // minimizers until every stratum minimum has been refined.
    let flow_opts = FlowOptions {
        stop_tol: 0.0,
        stop_newton_dist: None,
        max_length: 4.0 * r,
        record: false,
        ..Default::default()
    };
    loop {
        let mut best: Vec<Option<usize>> = vec![None; nb];
        for (i, q) in samples.iter().enumerate() {
            if q.d < s_min || !(span > 0.0) {
                continue;
            }
            let k = bin(q.d);
            if best[k].map_or(true, |j| q.value < samples[j].value) {
                best[k] = Some(i);
            }
        }
        let todo: Vec<usize> = best.into_iter().flatten().filter(|&i| !samples[i].refined).collect();
        if todo.is_empty() {
            break;
        }
        let refined: Vec<(usize, f64)> = todo
            .par_iter()
            .map(|&i| {
                let x = &samples[i].x;
                let d0 = samples[i].d;
                let cloud = std::iter::once(x.clone()).chain(
                    dirs.iter().take(8).map(|w| x.iter().zip(w).map(|(a, v)| a + 0.5 * d0 * v).collect::<Vec<f64>>()),
                );
                let d = cloud
                    .filter(|z| region.contains(z))
                    .filter_map(|z| match flow(b, &z, region, &FlowOptions { stop_newton_dist: Some(1e-4 * d0), ..flow_opts.clone() }) {
                        Ok(t) if t.terminal == Terminal::ReachedZeroLevel => {
                            Some(x.iter().zip(t.end()).map(|(a, e)| (a - e) * (a - e)).sum::<f64>().sqrt())
                        }
                        _ => None,
                    })
                    .fold(f64::INFINITY, f64::min);
                (i, d)
            })
            .collect();
        for (i, d) in refined {
            samples[i].d = samples[i].d.min(d);
            samples[i].refined = true;
        }
    }
    samples.retain(|q| q.d >= s_min);
    let mut strata: Vec<Option<Stratum>> = vec![None; nb];
    if span > 0.0 {
        for q in &samples {
            let slot = &mut strata[bin(q.d)];
            match slot {
                Some(s) => {
                    s.queries += 1;
                    if q.value < s.value {
                        s.value = q.value;
                        s.dist = q.d;
                    }
                }
                None => *slot = Some(Stratum { dist: q.d, value: q.value, queries: 1 }),
            }
        }
    }
    let strata: Vec<Stratum> = strata.into_iter().flatten().filter(|s| s.value > 0.0).collect();
    if strata.len() < 4 {
        return Err(EmpiricalError::TooSparse { spacing: v.spacing, strata: strata.len() });
    }
    let pts: Vec<(f64, f64)> = strata.iter().map(|s| (s.dist.ln(), s.value.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let alpha_hat = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let icp = my - alpha_hat * mx;
    let residual = (pts.iter().map(|p| (p.1 - icp - alpha_hat * p.0).powi(2)).sum::<f64>() / m).sqrt();
    let c_hat = samples.iter().map(|q| q.value / q.d.powf(alpha_hat)).fold(f64::INFINITY, f64::min);
    Ok(DistanceFit { alpha_hat, c_hat, residual, strata, spacing: v.spacing, v_sample_size: v.len(), queries: samples.len() })
}
