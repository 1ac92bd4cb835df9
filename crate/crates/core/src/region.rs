//! Compact regions (balls and boxes) and deterministic point sets inside them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("unsupported region `{0}`: expected `ball:R`, `ball:c1,..,cn:R` or `box:lo1,..,lon:hi1,..,hin`")]
    Unsupported(String),
    #[error("region has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("degenerate region: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().ok()).collect()
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    /// Parses `ball:R` (centred at `default_center`), `ball:c1,..,cn:R` or `box:lo..:hi..`.
    pub fn parse(text: &str, default_center: &[f64]) -> Result<Self, RegionError> {
        let n = default_center.len();
        let bad = || RegionError::Unsupported(text.to_string());
        let parts: Vec<&str> = text.split(':').collect();
        let region = match parts.as_slice() {
            ["ball", r] => Region::Ball { center: default_center.to_vec(), radius: r.trim().parse().map_err(|_| bad())? },
            ["ball", c, r] => Region::Ball { center: parse_list(c).ok_or_else(bad)?, radius: r.trim().parse().map_err(|_| bad())? },
            ["box", lo, hi] => Region::Box { lo: parse_list(lo).ok_or_else(bad)?, hi: parse_list(hi).ok_or_else(bad)? },
            _ => return Err(bad()),
        };
        region.validate(n)?;
        Ok(region)
    }

    pub fn validate(&self, n: usize) -> Result<(), RegionError> {
        match self {
            Region::Ball { center, radius } => {
                if center.len() != n {
                    return Err(RegionError::Dimension { expected: n, got: center.len() });
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(RegionError::Degenerate(format!("radius {radius}")));
                }
            }
            Region::Box { lo, hi } => {
                if lo.len() != n || hi.len() != n {
                    return Err(RegionError::Dimension { expected: n, got: lo.len().min(hi.len()) });
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a < b)) {
                    return Err(RegionError::Degenerate("box needs lo < hi in every coordinate".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball { center, .. } => center.len(),
            Region::Box { lo, .. } => lo.len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                norm(&d) <= *radius
            }
            Region::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b),
        }
    }

    /// Euclidean distance from `x` to the complement of the region (0 outside or on the boundary).
    pub fn dist_to_complement(&self, x: &[f64]) -> f64 {
        match self {
            Region::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                (radius - norm(&d)).max(0.0)
            }
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| (v - a).min(b - v))
                .fold(f64::INFINITY, f64::min)
                .max(0.0),
        }
    }

    /// Centre of the ball or the box.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Region::Ball { center, .. } => center.clone(),
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
        }
    }

    /// Radius of the smallest ball around [`Region::center`] containing the region.
    pub fn outer_radius(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => *radius,
            Region::Box { lo, hi } => 0.5 * norm(&lo.iter().zip(hi).map(|(a, b)| b - a).collect::<Vec<_>>()),
        }
    }

    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Ball { center, radius } => {
                (center.iter().map(|c| c - radius).collect(), center.iter().map(|c| c + radius).collect())
            }
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    /// `count` low-discrepancy points in the region: a Halton sequence with a
    /// seeded random shift, mapped to the bounding box and filtered by rejection.
    /// The first `k` points for a given seed do not depend on `count`.
    pub fn halton_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let (lo, hi) = self.bounding_box();
        let mut out = Vec::with_capacity(count);
        let mut index = 1u64;
        while out.len() < count {
            let x: Vec<f64> = (0..n)
                .map(|k| {
                    let u = (halton(index, PRIMES[k % PRIMES.len()]) + shift[k]).fract();
                    lo[k] + u * (hi[k] - lo[k])
                })
                .collect();
            index += 1;
            if self.contains(&x) {
                out.push(x);
            }
        }
        out
    }

    /// `count` independent uniform points in the region.
    pub fn uniform_points(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let (lo, hi) = self.bounding_box();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect();
            if self.contains(&x) {
                out.push(x);
            }
        }
        out
    }
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Uniformly distributed unit vector.
pub fn random_unit_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let r = norm(&v);
        if r > 1e-3 && r <= 1.0 {
            return v.into_iter().map(|a| a / r).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_radical_inverse() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn points_lie_inside_and_are_prefix_stable() {
        let b = Region::ball(vec![0.5, -1.0], 0.3);
        let p = b.halton_points(50, 7);
        assert!(p.iter().all(|x| b.contains(x)));
        assert_eq!(b.halton_points(20, 7)[..], p[..20]);
        assert_ne!(b.halton_points(5, 8), p[..5].to_vec());
    }

    #[test]
    fn distances_to_complement() {
        let b = Region::ball(vec![0.0, 0.0], 1.0);
        assert!((b.dist_to_complement(&[0.3, 0.0]) - 0.7).abs() < 1e-15);
        assert_eq!(b.dist_to_complement(&[1.0, 0.0]), 0.0);
        let bx = Region::Box { lo: vec![-1.0, 0.0], hi: vec![1.0, 4.0] };
        assert!((bx.dist_to_complement(&[0.5, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parsing() {
        assert_eq!(Region::parse("ball:2", &[1.0, 1.0]).unwrap(), Region::ball(vec![1.0, 1.0], 2.0));
        assert!(Region::parse("ball:0,0,0:1", &[0.0, 0.0]).is_err());
        assert!(Region::parse("annulus:1:2", &[0.0]).is_err());
        assert!(matches!(Region::parse("box:0,0:1,1", &[0.0, 0.0]).unwrap(), Region::Box { .. }));
    }
}
