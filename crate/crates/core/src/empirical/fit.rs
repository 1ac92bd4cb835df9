//! Log-log regression of the critical profile.

use serde::{Deserialize, Serialize};

use super::{CriticalProfile, EmpiricalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    #[default]
    LeastSquares,
    /// Theil-Sen: median of pairwise slopes.
    MedianSlope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignFit {
    pub sign: i8,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Estimated gradient exponent: the largest per-sign slope of
    /// `log |grad f|` against `log |f|` along the profile.
    pub rho_hat: f64,
    /// Largest constant with `sqrt(u) >= c |y|^rho_hat` at every converged level.
    pub c_hat: f64,
    /// Root-mean-square log residual of the fit that gave `rho_hat`.
    pub residual: f64,
    pub level_range: (f64, f64),
    pub method: FitMethod,
    pub per_sign: Vec<SignFit>,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

fn line_fit(pts: &[(f64, f64)], method: FitMethod) -> (f64, f64) {
    match method {
        FitMethod::LeastSquares => {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
            let slope = sxy / sxx;
            (slope, my - slope * mx)
        }
        FitMethod::MedianSlope => {
            let mut slopes = Vec::new();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    if pts[j].0 != pts[i].0 {
                        slopes.push((pts[j].1 - pts[i].1) / (pts[j].0 - pts[i].0));
                    }
                }
            }
            let slope = median(&mut slopes);
            let mut icp: Vec<f64> = pts.iter().map(|p| p.1 - slope * p.0).collect();
            (slope, median(&mut icp))
        }
    }
}

/// Fits `log sqrt(u) = a + rho log |y|` separately for each sign with
/// converged levels; `rho_hat` is the larger slope.
pub fn fit_exponent(profile: &CriticalProfile, method: FitMethod) -> Result<ExponentFit, EmpiricalError> {
    let mut per_sign = Vec::new();
    let mut all = Vec::new();
    for sign in [1i8, -1] {
        let levels: Vec<_> = profile.levels.iter().filter(|l| (l.y > 0.0) == (sign > 0)).collect();
        if levels.is_empty() {
            continue;
        }
        let pts: Vec<(f64, f64)> =
            levels.iter().filter(|l| l.converged && l.u > 0.0).map(|l| (l.y.abs().ln(), 0.5 * l.u.ln())).collect();
        if pts.len() < 4 {
            return Err(EmpiricalError::TooFewLevels { converged: pts.len() });
        }
        let (slope, intercept) = line_fit(&pts, method);
        let residual =
            (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
        per_sign.push(SignFit { sign, slope, intercept, residual, levels: pts.len() });
        all.extend(levels.iter().filter(|l| l.converged && l.u > 0.0).map(|l| (l.y.abs(), l.u)));
    }
    if per_sign.is_empty() {
        return Err(EmpiricalError::TooFewLevels { converged: 0 });
    }
    let best = per_sign.iter().max_by(|a, b| a.slope.total_cmp(&b.slope)).expect("nonempty");
    let rho_hat = best.slope;
    let c_hat = all.iter().map(|(y, u)| u.sqrt() / y.powf(rho_hat)).fold(f64::INFINITY, f64::min);
    let lo = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = all.iter().map(|p| p.0).fold(0.0, f64::max);
    let fit = ExponentFit { rho_hat, c_hat, residual: best.residual, level_range: (lo, hi), method, per_sign };
    if rho_hat < -1e-9 {
        return Err(EmpiricalError::NegativeSlope(Box::new(fit)));
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::super::{CriticalProfile, ProfileLevel};
    use super::*;

    fn profile(pairs: &[(f64, f64)]) -> CriticalProfile {
        CriticalProfile {
            center: vec![0.0],
            radius: 1.0,
            epsilon: 1.0,
            levels: pairs
                .iter()
                .map(|&(y, u)| ProfileLevel {
                    y,
                    u,
                    argmin: vec![0.0],
                    starts_used: 1,
                    converged: true,
                    lagrange_residual: 0.0,
                    on_boundary: false,
                })
                .collect(),
            unreachable: vec![],
        }
    }

    #[test]
    fn exact_power_law() {
        let pairs: Vec<(f64, f64)> = (1..8).map(|j| 0.5f64.powi(j)).map(|y| (y, 9.0 * y.powf(4.0 / 3.0))).collect();
        for m in [FitMethod::LeastSquares, FitMethod::MedianSlope] {
            let f = fit_exponent(&profile(&pairs), m).unwrap();
            assert!((f.rho_hat - 2.0 / 3.0).abs() < 1e-12);
            assert!((f.c_hat - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn larger_sign_slope_wins() {
        let mut pairs: Vec<(f64, f64)> = (1..6).map(|j| 0.5f64.powi(j)).map(|y| (y, y)).collect();
        pairs.extend((1..6).map(|j| 0.5f64.powi(j)).map(|y| (-y, y.powf(1.5))));
        let f = fit_exponent(&profile(&pairs), FitMethod::LeastSquares).unwrap();
        assert!((f.rho_hat - 0.75).abs() < 1e-12);
        assert_eq!(f.per_sign.len(), 2);
    }

    #[test]
    fn errors() {
        let few: Vec<(f64, f64)> = (1..4).map(|j| (0.5f64.powi(j), 1.0)).collect();
        assert!(matches!(fit_exponent(&profile(&few), FitMethod::LeastSquares), Err(EmpiricalError::TooFewLevels { .. })));
        let growing: Vec<(f64, f64)> = (1..6).map(|j| 0.5f64.powi(j)).map(|y| (y, 1.0 / y)).collect();
        assert!(matches!(
            fit_exponent(&profile(&growing), FitMethod::LeastSquares),
            Err(EmpiricalError::NegativeSlope(_))
        ));
    }
}
