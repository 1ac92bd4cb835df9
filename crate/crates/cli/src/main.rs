use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lojasiewicz::bounds::{bound_report, sufficiency_degree, Assumptions, ExactValue};
use lojasiewicz::elim::{
    build_case_i_system, build_case_ii_system, eliminate_to_curve, EliminateOptions, Method, Route,
};
use lojasiewicz::empirical::{fit_exponent, sample_profile, DistanceOptions, FitMethod, ProfileOptions};
use lojasiewicz::flow::{check_length_bound, flow, in_u_region, FlowOptions, Terminal, Verdict};
use lojasiewicz::nash::{exact_point, NashBranch};
use lojasiewicz::region::Region;
use lojasiewicz::report::{branch_assumptions, run_report, suffdeg_audit, CurveSummary, ReportOptions};
use lojasiewicz::vsample::build_v_sample;
use num_rational::BigRational;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "loj", version, about = "Effective Lojasiewicz exponents for polynomial and Nash functions")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy, Default)]
struct Flags {
    #[arg(long)]
    partial_y_nonzero: bool,
    #[arg(long)]
    polynomial: bool,
    #[arg(long)]
    isolated_zero: bool,
    #[arg(long)]
    rational: bool,
}

impl Flags {
    fn assumptions(self) -> Assumptions {
        Assumptions {
            partial_y_nonzero: self.partial_y_nonzero,
            isolated_zero: self.isolated_zero,
            polynomial_f: self.polynomial,
            rational_f: self.rational,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    #[value(name = "I", alias = "i")]
    I,
    #[value(name = "II", alias = "ii")]
    Ii,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Resultant,
    Interpolate,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Resultant => Method::Resultant,
            MethodArg::Interpolate => Method::Interpolate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    K,
    Tz,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::K => Route::K,
            RouteArg::Tz => Route::Tz,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FitArg {
    Ols,
    TheilSen,
}

impl From<FitArg> for FitMethod {
    fn from(f: FitArg) -> Self {
        match f {
            FitArg::Ols => FitMethod::LeastSquares,
            FitArg::TheilSen => FitMethod::MedianSlope,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form exponent bounds for (n, d).
    Bounds {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: u32,
        #[command(flatten)]
        flags: Flags,
        /// Known gradient exponent, for the derived distance exponent.
        #[arg(long)]
        rho: Option<BigRational>,
    },
    /// Sample the critical profile and fit the gradient exponent.
    Estimate {
        #[arg(long)]
        branch: PathBuf,
        #[arg(long)]
        center: Option<Point>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 12)]
        levels: usize,
        #[arg(long, default_value_t = 32)]
        starts: usize,
        #[arg(long, value_enum, default_value_t = FitArg::Ols)]
        fit: FitArg,
        /// Print (log|y|, log sqrt(u)) pairs as CSV instead of JSON.
        #[arg(long)]
        csv: bool,
    },
    /// Eliminate the critical system to a plane curve Q(y, u) = 0.
    Eliminate {
        #[arg(long)]
        branch: PathBuf,
        #[arg(long, value_enum, default_value_t = CaseArg::I)]
        case: CaseArg,
        /// Boundary sphere radius (case II).
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Resultant)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = RouteArg::K)]
        route: RouteArg,
        #[arg(long, default_value_t = 12)]
        cap: u32,
    },
    /// Follow the normalized gradient flow from a start point.
    Flow {
        #[arg(long)]
        branch: PathBuf,
        #[arg(long)]
        start: Point,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Check the length sandwich with constants "rho,C".
        #[arg(long)]
        check: Option<Point>,
        /// Write the trajectory polyline as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Sufficiency degree of jets, optionally audited on a branch.
    Suffdeg {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        branch: Option<PathBuf>,
        /// Audit this k instead of the computed one.
        #[arg(long)]
        k: Option<u64>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Full pipeline: bounds, elimination, fits, flow checks and verdicts.
    Report {
        #[arg(long)]
        branch: PathBuf,
        /// Also run the boundary case with this radius.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Resultant)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = RouteArg::K)]
        route: RouteArg,
        #[command(flatten)]
        flags: Flags,
    },
}

/// Comma-separated coordinates such as `0.6,0.8`.
#[derive(Clone, Debug)]
struct Point(Vec<f64>);

impl std::str::FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>().map(Point)
    }
}

/// How a run ended: JSON on success, a scientific failure, or bad input.
enum Outcome {
    Done(Value),
    Failed(Value),
    Usage(String),
}

fn numeric_error(stage: &str, e: impl std::fmt::Display) -> Outcome {
    Outcome::Failed(json!({ "schema": 1, "error": e.to_string(), "stage": stage }))
}

fn load_branch(path: &Path) -> Result<NashBranch, Outcome> {
    let text = fs::read_to_string(path).map_err(|e| Outcome::Usage(format!("cannot read {}: {e}", path.display())))?;
    NashBranch::from_json(&text).map_err(|e| Outcome::Usage(format!("bad branch file {}: {e}", path.display())))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn run(cli: Cli) -> Outcome {
    match run_inner(cli) {
        Ok(o) | Err(o) => o,
    }
}

fn run_inner(cli: Cli) -> Result<Outcome, Outcome> {
    let seed = cli.seed;
    Ok(match cli.command {
        Command::Bounds { n, d, flags, rho } => match bound_report(n, d, &flags.assumptions(), rho.as_ref()) {
            Ok(r) => Outcome::Done(to_value(&r)),
            Err(e) => Outcome::Usage(e.to_string()),
        },
        Command::Estimate { branch, center, radius, epsilon, levels, starts, fit, csv } => {
            let b = load_branch(&branch)?;
            let opts = ProfileOptions { center: center.map(|p| p.0), radius, epsilon, levels, starts, seed, ..Default::default() };
            let profile = sample_profile(&b, &opts).map_err(|e| numeric_error("profile", e))?;
            if csv {
                let mut s = String::from("log_abs_y,log_sqrt_u\n");
                for l in profile.converged() {
                    s.push_str(&format!("{},{}\n", l.y.abs().ln(), 0.5 * l.u.ln()));
                }
                return Ok(Outcome::Done(Value::String(s)));
            }
            let f = fit_exponent(&profile, fit.into()).map_err(|e| numeric_error("fit", e))?;
            Outcome::Done(json!({
                "schema": 1,
                "profile": to_value(&profile),
                "rho_hat": f.rho_hat,
                "C_hat": f.c_hat,
                "residual": f.residual,
                "fit": to_value(&f),
            }))
        }
        Command::Eliminate { branch, case, r, method, route, cap } => {
            let b = load_branch(&branch)?;
            let sys = match case {
                CaseArg::I => build_case_i_system(b.polynomial(), route.into()),
                CaseArg::Ii => {
                    let Some(r) = r else {
                        return Err(Outcome::Usage("case II needs --r".into()));
                    };
                    let center = exact_point(b.center()).map_err(|e| numeric_error("eliminate", e))?;
                    let r = exact_point(&[r]).map_err(|e| numeric_error("eliminate", e))?.remove(0);
                    build_case_ii_system(b.polynomial(), &r, &center, route.into())
                }
            }
            .map_err(|e| numeric_error("eliminate", e))?;
            let mut opts = EliminateOptions { cap, ..Default::default() };
            opts.profile.seed = seed;
            let curve = eliminate_to_curve(&sys, method.into(), Some(&b), None, &opts)
                .map_err(|e| numeric_error("eliminate", e))?;
            let s = CurveSummary::of(&curve).map_err(|e| numeric_error("eliminate", e))?;
            Outcome::Done(json!({
                "schema": 1,
                "Q": s.q,
                "D": s.degree,
                "lemma58": s.lemma58,
                "slopes": s.slopes,
                "residual": s.residual,
                "budget": s.budget,
                "factors": to_value(&s.factors),
                "provenance": to_value(&s.provenance),
                "shared_components": s.shared_components,
                "candidates": curve.candidates,
                "note": s.note,
            }))
        }
        Command::Flow { branch, start, tol, check, trace } => {
            let b = load_branch(&branch)?;
            let start = start.0;
            let region = Region::ball(b.center().to_vec(), b.radius());
            let opts = FlowOptions { tol, record: trace.is_some(), ..Default::default() };
            let t = flow(&b, &start, &region, &opts).map_err(|e| numeric_error("flow", e))?;
            if let Some(path) = &trace {
                let mut s = String::new();
                for (p, v) in t.points.iter().zip(&t.values) {
                    let coords: Vec<String> = p.iter().map(|c| c.to_string()).collect();
                    s.push_str(&format!("{},{v}\n", coords.join(",")));
                }
                fs::write(path, s).map_err(|e| Outcome::Usage(format!("cannot write {}: {e}", path.display())))?;
            }
            let mut out = json!({
                "schema": 1,
                "start": start,
                "end": t.end(),
                "arc_length": t.arc_length,
                "terminal": to_value(&t.terminal),
                "start_value": t.start_value,
                "end_value": t.end_value,
                "steps": t.steps,
            });
            let mut failed = false;
            if let Some(rc) = check {
                let [rho, c] = rc.0[..] else {
                    return Err(Outcome::Usage("--check takes \"rho,C\"".into()));
                };
                let v = build_v_sample(&b, &region, 2000, seed).map_err(|e| numeric_error("v-sample", e))?;
                let dist = if t.terminal == Terminal::ReachedZeroLevel {
                    let chord = start.iter().zip(t.end()).map(|(a, e)| (a - e) * (a - e)).sum::<f64>().sqrt();
                    v.dist(&start).min(chord)
                } else {
                    v.dist(&start)
                };
                let inside = in_u_region(&b, &start, &region, rho, c).map_err(|e| numeric_error("flow", e))?;
                let lc = check_length_bound(&t, rho, c, dist, inside, 1e-3).map_err(|e| numeric_error("flow", e))?;
                failed = lc.verdict == Verdict::Fail;
                out["check"] = to_value(&lc);
            }
            if failed {
                Outcome::Failed(out)
            } else {
                Outcome::Done(out)
            }
        }
        Command::Suffdeg { n, d, branch, k, flags } => {
            let b = branch.as_deref().map(load_branch).transpose()?;
            let a = match &b {
                Some(b) => branch_assumptions(b, &flags.assumptions()),
                None => flags.assumptions(),
            };
            let (n, d) = match (&b, n, d) {
                (_, Some(n), Some(d)) => (n, d),
                (Some(b), _, _) => (b.n() as u32, b.degree_at().max(1)),
                _ => return Err(Outcome::Usage("suffdeg needs --n and --d, or --branch".into())),
            };
            let s = sufficiency_degree(n, d, &a).map_err(|e| Outcome::Usage(e.to_string()))?;
            let mut out = json!({ "schema": 1, "n": n, "d": d, "k": s.k.to_string(), "source": s.source,
                "candidates": to_value(&s.candidates) });
            let mut failed = false;
            if let Some(b) = &b {
                let (kv, src) = match k {
                    Some(k) => (ExactValue::Integer(k.into()), "user".to_string()),
                    None => (s.k.clone(), s.source.clone()),
                };
                let region = Region::ball(b.center().to_vec(), b.radius());
                let opts = DistanceOptions { seed, v_sample_size: 2000, ..Default::default() };
                let audit = suffdeg_audit(b, &kv, &src, &region, &opts).map_err(|e| numeric_error("suffdeg", e))?;
                failed = audit.verdict == Verdict::Fail;
                out["audit"] = to_value(&audit);
            }
            if failed {
                Outcome::Failed(out)
            } else {
                Outcome::Done(out)
            }
        }
        Command::Report { branch, r, method, route, flags } => {
            let b = load_branch(&branch)?;
            let opts = ReportOptions {
                seed,
                assumptions: flags.assumptions(),
                route: route.into(),
                method: method.into(),
                case_ii_radius: r,
                ..Default::default()
            };
            let rep = run_report(&b, &opts).map_err(|e| numeric_error("report", e))?;
            if rep.any_fail() {
                Outcome::Failed(to_value(&rep))
            } else {
                Outcome::Done(to_value(&rep))
            }
        }
    })
}

fn emit(v: &Value) {
    let mut out = std::io::stdout().lock();
    let text = match v {
        Value::String(s) => s.clone(),
        v => serde_json::to_string_pretty(v).expect("serializable") + "\n",
    };
    let _ = out.write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Outcome::Done(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Outcome::Failed(v) => {
            emit(&v);
            ExitCode::from(1)
        }
        Outcome::Usage(msg) => {
            eprintln!("error: {msg}");
            eprintln!("usage: loj <bounds|estimate|eliminate|flow|suffdeg|report> [options]; see loj --help");
            ExitCode::from(2)
        }
    }
}
