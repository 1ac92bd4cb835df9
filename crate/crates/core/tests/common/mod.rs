#![allow(dead_code)]

use lojasiewicz::nash::{BranchSpec, NashBranch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn branch(p: &str, n: usize, seed_y: f64, radius: f64) -> NashBranch {
    NashBranch::from_spec(&BranchSpec { p: p.into(), vars: n, seed_x: vec![0.0; n], seed_y, radius }).unwrap()
}

/// f = x1^2 + x2^2.
pub fn paraboloid() -> NashBranch {
    branch("y - x1^2 - x2^2", 2, 0.0, 1.0)
}

/// f = x1^2 x2^2.
pub fn axes() -> NashBranch {
    branch("y - x1^2*x2^2", 2, 0.0, 1.0)
}

/// f = sqrt(1 + |x|^2) - 1, the branch of y^2 + 2y = |x|^2 through the origin.
pub fn nash() -> NashBranch {
    branch("y^2 + 2*y - x1^2 - x2^2", 2, 0.0, 0.5)
}

/// Uniform points in the ball of radius `r` about the origin.
pub fn ball_points(n: usize, r: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-r..r)).collect();
        if x.iter().map(|v| v * v).sum::<f64>() < r * r {
            out.push(x);
        }
    }
    out
}
