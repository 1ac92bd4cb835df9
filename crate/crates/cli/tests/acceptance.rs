//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Run with `cargo test -p lojasiewicz-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lojasiewicz::bounds::{
    best_rho, dist_exponents, prior_bound_comparison, r_bound, s_bound, sufficiency_degree, Assumptions, DegreeBound,
    ExactValue,
};
use lojasiewicz::elim::{build_case_i_system, eliminate_to_curve, slope_candidates, EliminateOptions, Method, Route};
use lojasiewicz::empirical::{
    fit_distance_exponent, fit_exponent, sample_profile, DistanceOptions, ExponentFit, FitMethod, ProfileOptions,
};
use lojasiewicz::flow::{check_kl, flow, in_u_region, FlowOptions, Terminal};
use lojasiewicz::nash::{BranchSpec, NashBranch};
use lojasiewicz::poly::{parse, Polynomial};
use lojasiewicz::region::Region;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn branch(p: &str, n: usize, radius: f64) -> NashBranch {
    NashBranch::from_spec(&BranchSpec { p: p.into(), vars: n, seed_x: vec![0.0; n], seed_y: 0.0, radius }).unwrap()
}

fn paraboloid() -> NashBranch {
    branch("y - x1^2 - x2^2", 2, 1.0)
}

fn axes() -> NashBranch {
    branch("y - x1^2*x2^2", 2, 1.0)
}

fn nash() -> NashBranch {
    branch("y^2 + 2*y - x1^2 - x2^2", 2, 0.5)
}

fn fit(b: &NashBranch, opts: &ProfileOptions) -> Result<ExponentFit, String> {
    let p = sample_profile(b, opts).map_err(|e| e.to_string())?;
    fit_exponent(&p, FitMethod::LeastSquares).map_err(|e| e.to_string())
}

fn yu(text: &str) -> Polynomial {
    parse(text, &["y", "u"]).unwrap()
}

fn proportional(a: &Polynomial, b: &Polynomial) -> bool {
    match (a.leading_term(), b.leading_term()) {
        (Some((_, ca)), Some((_, cb))) => a.scale(cb) == b.scale(ca),
        _ => false,
    }
}

fn power(base: u64, exp: u32) -> BigUint {
    (0..exp).fold(BigUint::one(), |acc, _| acc * base)
}

fn formula_exactness() -> Outcome {
    let general = Assumptions::default();
    let py = Assumptions { partial_y_nonzero: true, ..general };
    for n in 1..=8u32 {
        for d in 2..=10u64 {
            let du = d as u32;
            let r = BigUint::from(2 * d * (2 * d - 1)).max(power(3 * d - 2, n) * d) + 1u32;
            let s = power(2 * d - 1, 3 * n + 1) * 2u32;
            let prior = power(6 * d - 3, n + n * (n + 1) / 2 - 1) * d;
            ensure!(r_bound(n, du).unwrap() == DegreeBound::Value(r.clone()), "R({n},{d})");
            ensure!(s_bound(n, du).unwrap() == s, "S({n},{d})");
            ensure!(sufficiency_degree(n, du, &general).unwrap().k == ExactValue::Integer(s.clone()), "k({n},{d})");
            let ks = sufficiency_degree(n, du, &py).unwrap().k;
            ensure!(ks == ExactValue::Integer((power(3 * d - 2, n) * d + 1u32).min(s.clone())), "k_py({n},{d})");
            let dist = dist_exponents(n, du, &py, None).unwrap();
            let get = |name: &str| dist.iter().find(|e| e.name == name).unwrap().value.to_rational();
            let int = |v: &BigUint| BigRational::from_integer(v.clone().into());
            ensure!(get("corollary_3_6_f") == int(&s), "dist f ({n},{d})");
            ensure!(get("corollary_3_6_grad") == int(&(&s - 1u32)), "dist grad ({n},{d})");
            ensure!(get("theorem_2_1_dist_f") == int(&r), "dist f, partial y ({n},{d})");
            let cmp = prior_bound_comparison(n, du).unwrap();
            ensure!(cmp.prior_bound.to_rational() == int(&prior), "prior ({n},{d})");
            ensure!(cmp.sharper == (s < prior), "sharper ({n},{d})");
            let rho = best_rho(n, du, &py).unwrap().value.to_rational();
            ensure!(rho == BigRational::one() - int(&r).recip(), "best rho ({n},{d})");
        }
    }
    let spot = |v: DegreeBound| v.value().cloned().unwrap();
    ensure!(spot(r_bound(2, 2).unwrap()) == BigUint::from(33u32), "r_bound(2,2)");
    ensure!(s_bound(2, 2).unwrap() == BigUint::from(4374u32), "s_bound(2,2)");
    ensure!(s_bound(1, 2).unwrap() == BigUint::from(162u32), "s_bound(1,2)");
    Ok("72 grid points match; R(2,2) = 33, S(2,2) = 4374, S(1,2) = 162".into())
}

fn one_dimensional_law() -> Outcome {
    let mut seen = Vec::new();
    for k in 2..=6u32 {
        let b = branch(&format!("y - x1^{k}"), 1, 1.0);
        let f = fit(&b, &ProfileOptions { starts: 4, levels: 10, ..Default::default() })?;
        let want = 1.0 - 1.0 / k as f64;
        ensure!((f.rho_hat - want).abs() <= 0.01, "x^{k}: rho_hat {} vs {want}", f.rho_hat);
        seen.push(format!("{:.4}", f.rho_hat));
    }
    Ok(format!("rho_hat for k = 2..6: {}", seen.join(", ")))
}

fn elimination_oracle(b: &NashBranch, q: &str, lemma58: &str, slope: &str, rho: f64, tol: f64) -> Outcome {
    let s = build_case_i_system(b.polynomial(), Route::K).map_err(|e| e.to_string())?;
    let c = eliminate_to_curve(&s, Method::Resultant, Some(b), None, &EliminateOptions::default())
        .map_err(|e| e.to_string())?;
    ensure!(proportional(&c.q, &yu(q)), "Q = {}, want {q}", c.q_text);
    let cands = slope_candidates(&c).map_err(|e| e.to_string())?;
    ensure!(cands.lemma58.to_string() == lemma58, "lemma58 {} vs {lemma58}", cands.lemma58);
    let slopes: Vec<String> = cands.slopes.iter().map(|s| s.to_string()).collect();
    ensure!(slopes == [slope], "slopes {slopes:?} vs [{slope}]");
    let f = fit(b, &ProfileOptions { starts: 12, levels: 12, ..Default::default() })?;
    ensure!((f.rho_hat - rho).abs() <= tol, "rho_hat {} vs {rho} +- {tol}", f.rho_hat);
    Ok(format!("Q = {}, lemma58 = {lemma58}, slopes = {{{slope}}}, rho_hat = {:.4}", c.q_text, f.rho_hat))
}

/// Dense polynomial with all monomials of degree 2..=d and random integer coefficients.
fn random_dense(rng: &mut ChaCha8Rng, d: u32) -> String {
    let mut terms = Vec::new();
    for deg in 2..=d {
        for a in 0..=deg {
            let mut c = 0;
            while c == 0 {
                c = rng.gen_range(-3i32..=3);
            }
            terms.push(format!("{c}*x1^{a}*x2^{}", deg - a));
        }
    }
    format!("y - ({})", terms.join(" + "))
}

fn theorem_consistency() -> Outcome {
    let mut cases: Vec<(String, NashBranch, bool)> = vec![
        ("paraboloid".into(), paraboloid(), true),
        ("axes".into(), axes(), true),
        ("nash".into(), nash(), false),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..20 {
        let d = 2 + (i % 3) as u32;
        let p = random_dense(&mut rng, d);
        cases.push((format!("random #{i} (d = {d})"), branch(&p, 2, 0.05), true));
    }
    let popts = ProfileOptions { starts: 8, levels: 10, ..Default::default() };
    let dopts = DistanceOptions { v_sample_size: 300, directions: 32, scales: 16, ..Default::default() };
    let mut nash_rho = None;
    for (name, b, explicit) in &cases {
        let (n, d) = (b.n() as u32, b.degree_at());
        let a = Assumptions { partial_y_nonzero: *explicit, polynomial_f: *explicit, ..Default::default() };
        let bound = best_rho(n, d, &a).unwrap().value.to_f64();
        let f = fit(b, &ProfileOptions { epsilon: 0.5 * b.radius() * b.radius(), ..popts.clone() })
            .map_err(|e| format!("{name}: {e}"))?;
        ensure!(f.rho_hat <= bound, "{name}: rho_hat {} > {bound}", f.rho_hat);
        let region = Region::ball(vec![0.0; 2], 0.9 * b.radius());
        let df = fit_distance_exponent(b, &region, &dopts).map_err(|e| format!("{name}: {e}"))?;
        let s = s_bound(n, d).unwrap().to_string().parse::<f64>().unwrap();
        ensure!(df.alpha_hat <= s, "{name}: alpha_hat {} > S = {s}", df.alpha_hat);
        if name == "nash" {
            nash_rho = Some(f.rho_hat);
        }
    }
    let nr = nash_rho.unwrap();
    ensure!((nr - 0.5).abs() <= 0.02, "nash branch rho_hat {nr} vs 0.50 +- 0.02");
    Ok(format!("{} functions, zero violations; nash rho_hat = {nr:.4}", cases.len()))
}

fn trajectory_sandwich() -> Outcome {
    let region = Region::ball(vec![0.0, 0.0], 1.0);
    let opts = FlowOptions { stop_tol: 1e-20, record: false, ..Default::default() };
    let b = paraboloid();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_tight = 0.0f64;
    for _ in 0..100 {
        let x0 = loop {
            let x: [f64; 2] = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if r > 1e-3 && r < 0.5 {
                break x;
            }
        };
        ensure!(in_u_region(&b, &x0, &region, 0.5, 2.0).unwrap(), "{x0:?} outside U");
        let t = flow(&b, &x0, &region, &opts).map_err(|e| e.to_string())?;
        ensure!(t.terminal == Terminal::ReachedZeroLevel, "{x0:?}: {:?}", t.terminal);
        let dist = (x0[0] * x0[0] + x0[1] * x0[1]).sqrt();
        let upper = t.start_value.abs().sqrt();
        ensure!(dist <= t.arc_length * (1.0 + 1e-3), "lower bound at {x0:?}: {dist} > {}", t.arc_length);
        ensure!(t.arc_length <= upper * (1.0 + 1e-3), "upper bound at {x0:?}: {} > {upper}", t.arc_length);
        worst_tight = worst_tight.max((upper - t.arc_length) / upper);
    }
    ensure!(worst_tight <= 1e-3, "upper bound slack {worst_tight}");

    let b = axes();
    let f = fit(&b, &ProfileOptions { starts: 12, levels: 12, ..Default::default() })?;
    let (rho, c) = (f.rho_hat, f.c_hat);
    // Stop by distance to the zero set: a small |f| can still be far from V where f is flat.
    let opts = FlowOptions { stop_tol: 0.0, stop_newton_dist: Some(1e-10), record: false, ..Default::default() };
    let mut checked = 0;
    for x0 in region.halton_points(2000, 6) {
        if checked == 100 {
            break;
        }
        if b.eval(&x0).unwrap() <= 0.0 || !in_u_region(&b, &x0, &region, rho, c).unwrap() {
            continue;
        }
        let t = flow(&b, &x0, &region, &opts).map_err(|e| e.to_string())?;
        ensure!(t.terminal == Terminal::ReachedZeroLevel, "axes {x0:?}: {:?}", t.terminal);
        let dist = x0[0].abs().min(x0[1].abs());
        let upper = t.start_value.abs().powf(1.0 - rho) / ((1.0 - rho) * c);
        ensure!(dist <= t.arc_length * (1.0 + 1e-3), "axes lower bound at {x0:?}");
        ensure!(t.arc_length <= upper * (1.0 + 1e-3), "axes upper bound at {x0:?}: {} > {upper}", t.arc_length);
        checked += 1;
    }
    ensure!(checked == 100, "only {checked} axes starts in the U region");
    Ok(format!("paraboloid upper-bound slack {worst_tight:.1e}; axes 100 starts with rho {rho:.4}, C {c:.4}"))
}

fn kl_check() -> Outcome {
    let b = paraboloid();
    let region = Region::ball(vec![0.0, 0.0], 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pts: Vec<Vec<f64>> =
        region.uniform_points(10_000, &mut rng).into_iter().filter(|x| x[0] != 0.0 || x[1] != 0.0).collect();
    let k = check_kl(&b, &pts, 0.5, 2.0).map_err(|e| e.to_string())?;
    ensure!((k.min_value - 1.0).abs() <= 1e-6, "min {}", k.min_value);
    Ok(format!("min over {} samples = {:.9}", k.samples, k.min_value))
}

fn sharper_than_prior() -> Outcome {
    for n in 4..=8 {
        for d in 2..=6 {
            ensure!(prior_bound_comparison(n, d).unwrap().sharper, "not sharper at ({n},{d})");
        }
    }
    Ok("sharper for all n in 4..=8, d in 2..=6".into())
}

fn gradient_correctness() -> Outcome {
    let h = 1e-5;
    let mut worst = 0.0f64;
    let branches = [paraboloid(), axes(), nash(), branch("y^3 + y - x1^2 + x2", 2, 0.5)];
    for b in &branches {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = 0.9 * b.radius();
        let mut count = 0;
        while count < 200 {
            let x = [rng.gen_range(-r..r), rng.gen_range(-r..r)];
            if x[0] * x[0] + x[1] * x[1] >= r * r {
                continue;
            }
            count += 1;
            let g = b.branch_gradient(&x).map_err(|e| e.to_string())?;
            for i in 0..2 {
                let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
                xp[i] += h;
                xm[i] -= h;
                let fd = (b.eval(&xp).unwrap() - b.eval(&xm).unwrap()) / (2.0 * h);
                let err = (fd - g.grad[i]).abs();
                ensure!(err <= 1e-6, "{} at {x:?}: {err}", b.text());
                worst = worst.max(err);
            }
        }
    }
    Ok(format!("4 branches x 200 points, worst error {worst:.1e}"))
}

fn determinism() -> Outcome {
    let branch = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/branches/circle.json");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_loj"))
            .args(["report", "--seed", "0", "--branch", branch.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    ensure!(a.status.success(), "exit {:?}: {}", a.status.code(), String::from_utf8_lossy(&a.stderr));
    ensure!(!a.stdout.is_empty() && a.stdout == b.stdout, "outputs differ");
    Ok(format!("{} bytes, identical", a.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("formula exactness", Duration::from_secs(1), formula_exactness),
        ("one-dimensional law", Duration::from_secs(10), one_dimensional_law),
        ("paraboloid elimination", Duration::from_secs(10), || {
            elimination_oracle(&paraboloid(), "u - 4*y", "1/2", "1/2", 0.5, 0.01)
        }),
        ("axes elimination", Duration::from_secs(30), || {
            elimination_oracle(&axes(), "u^2 - 64*y^3", "3/4", "3/4", 0.75, 0.02)
        }),
        ("theorem consistency", Duration::from_secs(300), theorem_consistency),
        ("trajectory sandwich", Duration::from_secs(60), trajectory_sandwich),
        ("KL check", Duration::from_secs(5), kl_check),
        ("sharper than prior", Duration::from_secs(1), sharper_than_prior),
        ("gradient correctness", Duration::from_secs(5), gradient_correctness),
        ("determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = match result {
            Ok(msg) if took > limit => Err(format!("{msg}; took {took:.2?}, limit {limit:?}")),
            other => other,
        };
        match result {
            Ok(msg) => println!("criterion {:>2} PASS  {name} ({took:.2?}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({took:.2?}): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
