//! Sampled check of `|grad f(x)| >= c |f(x)|^rho`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EmpiricalError;
use crate::nash::NashBranch;
use crate::region::{random_unit_vector, Region};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub samples: usize,
    /// Smallest `|grad f| / (c |f|^rho) - 1` over samples with `f != 0`.
    pub worst_margin: f64,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

/// Half the samples are uniform in the region, half lie at log-uniform
/// distances from its centre along random directions.
pub fn verify_inequality(
    b: &NashBranch,
    region: &Region,
    rho: f64,
    c: f64,
    samples: usize,
    seed: u64,
) -> Result<InequalityCheck, EmpiricalError> {
    region.validate(b.n())?;
    if !(0.0..1.0).contains(&rho) || !(c > 0.0) {
        return Err(EmpiricalError::Invalid(format!("need 0 <= rho < 1 and c > 0, got rho = {rho}, c = {c}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = samples / 2;
    let mut pts = region.uniform_points(samples - half, &mut rng);
    let center = region.center();
    let r = region.outer_radius();
    let mut k = 0;
    while pts.len() < samples {
        let w = random_unit_vector(b.n(), &mut rng);
        let s = r * 1e-6f64.powf((k % 97) as f64 / 96.0);
        k += 1;
        let x: Vec<f64> = center.iter().zip(&w).map(|(a, v)| a + s * v).collect();
        if region.contains(&x) {
            pts.push(x);
        }
    }
    let evals: Vec<(Vec<f64>, f64, f64)> = pts
        .into_par_iter()
        .filter(|x| b.in_domain(x))
        .map(|x| {
            let gv = b.branch_gradient(&x)?;
            Ok((x, gv.value, gv.norm()))
        })
        .collect::<Result<_, crate::nash::NashError>>()?;
    let mut worst_margin = f64::INFINITY;
    let mut violations = Vec::new();
    for (x, value, grad) in &evals {
        if *value == 0.0 {
            continue;
        }
        let rhs = c * value.abs().powf(rho);
        let margin = grad / rhs - 1.0;
        worst_margin = worst_margin.min(margin);
        if margin < -1e-9 {
            violations.push(Violation { x: x.clone(), value: *value, grad: *grad, margin });
        }
    }
    Ok(InequalityCheck { samples: evals.len(), worst_margin, pass: violations.is_empty(), violations })
}
