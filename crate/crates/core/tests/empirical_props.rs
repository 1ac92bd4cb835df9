mod common;

use common::{axes, nash, paraboloid};
use lojasiewicz::bounds::{rho_bounds, Assumptions};
use lojasiewicz::empirical::{
    fit_distance_exponent, fit_exponent, sample_profile, DistanceOptions, FitMethod, ProfileOptions,
};
use lojasiewicz::region::Region;

fn quick() -> ProfileOptions {
    ProfileOptions { starts: 12, levels: 10, ..Default::default() }
}

#[test]
fn interior_minimizers_satisfy_the_lagrange_condition() {
    for b in [paraboloid(), axes(), nash()] {
        let p = sample_profile(&b, &quick()).unwrap();
        let interior: Vec<_> = p.converged().filter(|l| !l.on_boundary).collect();
        assert!(!interior.is_empty(), "{}", b.text());
        for l in interior {
            assert!(l.lagrange_residual <= 1e-6, "{} at y = {}: {}", b.text(), l.y, l.lagrange_residual);
        }
    }
}

#[test]
fn fitted_exponent_respects_every_applicable_bound() {
    let explicit = Assumptions { partial_y_nonzero: true, polynomial_f: true, ..Default::default() };
    for (b, a) in [(paraboloid(), explicit), (axes(), explicit), (nash(), Assumptions::default())] {
        let fit = fit_exponent(&sample_profile(&b, &quick()).unwrap(), FitMethod::LeastSquares).unwrap();
        for e in rho_bounds(b.n() as u32, b.degree_at(), &a).unwrap() {
            assert!(fit.rho_hat <= e.value.to_f64(), "{}: {} > {} ({})", b.text(), fit.rho_hat, e.value, e.name);
        }
    }
}

#[test]
fn distance_exponent_is_at_most_the_inverse_gap() {
    let dopts = DistanceOptions { v_sample_size: 400, directions: 64, scales: 24, ..Default::default() };
    for b in [paraboloid(), axes()] {
        let fit = fit_exponent(&sample_profile(&b, &quick()).unwrap(), FitMethod::LeastSquares).unwrap();
        let region = Region::ball(vec![0.0; 2], 0.9);
        let d = fit_distance_exponent(&b, &region, &dopts).unwrap();
        let cap = 1.0 / (1.0 - fit.rho_hat) + 0.1;
        assert!(d.alpha_hat <= cap, "{}: alpha {} > {cap}", b.text(), d.alpha_hat);
    }
}

#[test]
fn doubling_starts_never_raises_a_level_minimum() {
    for b in [axes(), nash()] {
        let few = sample_profile(&b, &ProfileOptions { starts: 6, ..quick() }).unwrap();
        let many = sample_profile(&b, &ProfileOptions { starts: 12, ..quick() }).unwrap();
        for (a, m) in few.levels.iter().zip(&many.levels) {
            assert_eq!(a.y, m.y);
            assert!(m.u <= a.u, "{} at y = {}: {} > {}", b.text(), a.y, m.u, a.u);
        }
    }
}

#[test]
fn median_slope_agrees_with_least_squares_on_clean_profiles() {
    let p = sample_profile(&axes(), &quick()).unwrap();
    let ols = fit_exponent(&p, FitMethod::LeastSquares).unwrap();
    let ts = fit_exponent(&p, FitMethod::MedianSlope).unwrap();
    assert!((ols.rho_hat - ts.rho_hat).abs() < 0.01, "{} vs {}", ols.rho_hat, ts.rho_hat);
}
