//! The combined certificate: bounds, elimination, empirical fits and flow checks
//! for one branch.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{bound_report, sufficiency_degree, Assumptions, BoundError, BoundReport, ExactValue};
use crate::elim::{
    build_case_i_system, build_case_ii_system, eliminate_to_curve, lemma58_bound, slope_candidates, CurveFactor,
    ElimError, EliminateOptions, Method, PlaneCurve, Provenance, Route,
};
use crate::empirical::{
    fit_distance_exponent_with, fit_exponent, sample_profile, DistanceFit, DistanceOptions, EmpiricalError, ExponentFit,
    FitMethod, ProfileOptions,
};
use crate::flow::{check_length_bound, flow, in_u_region, FlowOptions, Terminal, Verdict};
use crate::nash::{exact_point, NashBranch};
use crate::poly::rational_to_f64;
use crate::region::Region;
use crate::vsample::build_v_sample;

pub const SCHEMA: u32 = 1;

/// Slack allowed when a fitted exponent is compared with an exact bound it may attain.
pub const FIT_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Empirical(#[from] EmpiricalError),
    #[error("sufficiency audit needs k >= 2, got {0}")]
    BadK(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    #[serde(rename = "P")]
    pub p: String,
    pub n: usize,
    pub d: u32,
    pub seed_x: Vec<f64>,
    pub seed_y: f64,
    pub radius: f64,
    pub explicit: bool,
}

impl BranchSummary {
    pub fn of(b: &NashBranch) -> Self {
        BranchSummary {
            p: b.text().to_string(),
            n: b.n(),
            d: b.degree_at(),
            seed_x: b.seed_x().to_vec(),
            seed_y: b.seed_y(),
            radius: b.radius(),
            explicit: b.is_explicit(),
        }
    }
}

/// A plane curve with its exponent candidates, in a form that survives a JSON round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    #[serde(rename = "Q")]
    pub q: String,
    #[serde(rename = "D")]
    pub degree: u32,
    pub factors: Vec<CurveFactor>,
    pub provenance: Provenance,
    pub shared_components: Vec<String>,
    pub residual: Option<f64>,
    pub budget: String,
    pub lemma58: String,
    pub slopes: Vec<String>,
    pub note: Option<String>,
}

impl CurveSummary {
    pub fn of(curve: &PlaneCurve) -> Result<Self, ElimError> {
        let cands = slope_candidates(curve)?;
        Ok(CurveSummary {
            q: curve.q_text.clone(),
            degree: curve.degree,
            factors: curve.factors.clone(),
            provenance: curve.provenance,
            shared_components: curve.shared_components.clone(),
            residual: curve.residual,
            budget: curve.budget.clone(),
            lemma58: lemma58_bound(curve)?.to_string(),
            slopes: cands.slopes.iter().map(|s| s.to_string()).collect(),
            note: curve.note.clone(),
        })
    }

    pub fn degree_bound_f64(&self) -> f64 {
        self.lemma58.parse::<BigRational>().map(|q| rational_to_f64(&q)).unwrap_or(f64::NAN)
    }
}

/// Result of one pipeline stage: a value or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage<T> {
    Ok(T),
    Error(String),
}

impl<T> Stage<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Stage::Ok(v) => Some(v),
            Stage::Error(_) => None,
        }
    }

    fn from_result<E: std::fmt::Display>(r: Result<T, E>) -> Self {
        match r {
            Ok(v) => Stage::Ok(v),
            Err(e) => Stage::Error(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub rho: f64,
    pub c: f64,
    pub starts: usize,
    pub pass: usize,
    pub fail: usize,
    pub informational: usize,
    pub inapplicable: usize,
    pub errors: usize,
    /// Smallest `(length - dist) / length` over checked trajectories.
    pub worst_lower_margin: Option<f64>,
    /// Smallest `(bound - length) / bound` over checked trajectories.
    pub worst_upper_margin: Option<f64>,
    pub terminals: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedVerdict {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl NamedVerdict {
    fn new(name: &str, verdict: Verdict, detail: String) -> Self {
        NamedVerdict { name: name.into(), verdict, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema: u32,
    pub seed: u64,
    pub branch: BranchSummary,
    pub bounds: BoundReport,
    pub case_i: Stage<CurveSummary>,
    pub case_ii: Option<Stage<CurveSummary>>,
    pub fit: Stage<ExponentFit>,
    pub distance: Stage<DistanceFit>,
    pub flow: Stage<FlowStats>,
    pub verdicts: Vec<NamedVerdict>,
}

impl ReportBundle {
    pub fn verdict(&self, name: &str) -> Option<&NamedVerdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn any_fail(&self) -> bool {
        self.verdicts.iter().any(|v| v.verdict == Verdict::Fail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub seed: u64,
    /// Extra hypotheses on top of those read off the branch.
    pub assumptions: Assumptions,
    pub route: Route,
    pub method: Method,
    /// Boundary radius for the case II elimination; case II is skipped without it.
    pub case_ii_radius: Option<f64>,
    pub eliminate: EliminateOptions,
    pub profile: ProfileOptions,
    pub fit_method: FitMethod,
    pub distance: DistanceOptions,
    pub flow_starts: usize,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            seed: 0,
            assumptions: Assumptions::default(),
            route: Route::K,
            method: Method::Resultant,
            case_ii_radius: None,
            eliminate: EliminateOptions::default(),
            profile: ProfileOptions::default(),
            fit_method: FitMethod::LeastSquares,
            distance: DistanceOptions { v_sample_size: 2000, ..Default::default() },
            flow_starts: 32,
        }
    }
}

/// Hypotheses implied by the form of the branch: `P = y - f(x)` has `dP/dy = 1`
/// and makes f a polynomial of degree `deg P`.
pub fn branch_assumptions(b: &NashBranch, extra: &Assumptions) -> Assumptions {
    let explicit = b.is_explicit();
    Assumptions {
        partial_y_nonzero: extra.partial_y_nonzero || explicit,
        polynomial_f: extra.polynomial_f || explicit,
        ..*extra
    }
}

fn curve_stage(
    b: &NashBranch,
    build: impl FnOnce() -> Result<crate::elim::EliminationSystem, ElimError>,
    opts: &ReportOptions,
) -> Stage<CurveSummary> {
    let mut eo = opts.eliminate.clone();
    eo.profile.seed = opts.seed;
    let r = build()
        .and_then(|s| eliminate_to_curve(&s, opts.method, Some(b), None, &eo))
        .and_then(|c| CurveSummary::of(&c));
    Stage::from_result(r)
}

fn flow_stage(
    b: &NashBranch,
    region: &Region,
    v: &crate::vsample::VSample,
    rho: f64,
    c: f64,
    starts: usize,
    seed: u64,
) -> FlowStats {
    let mut stats = FlowStats {
        rho,
        c,
        starts,
        pass: 0,
        fail: 0,
        informational: 0,
        inapplicable: 0,
        errors: 0,
        worst_lower_margin: None,
        worst_upper_margin: None,
        terminals: BTreeMap::new(),
    };
    let opts = FlowOptions { record: false, ..Default::default() };
    for x0 in region.halton_points(starts, seed) {
        let checked = flow(b, &x0, region, &opts).and_then(|t| {
            let end = t.end().to_vec();
            let chord = x0.iter().zip(&end).map(|(a, e)| (a - e) * (a - e)).sum::<f64>().sqrt();
            let dist = if t.terminal == Terminal::ReachedZeroLevel { v.dist(&x0).min(chord) } else { v.dist(&x0) };
            let inside = in_u_region(b, &x0, region, rho, c)?;
            Ok((t.terminal, check_length_bound(&t, rho, c, dist, inside, 1e-3)?))
        });
        let Ok((terminal, check)) = checked else {
            stats.errors += 1;
            continue;
        };
        let key = serde_json::to_value(terminal).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        *stats.terminals.entry(key).or_default() += 1;
        match check.verdict {
            Verdict::Pass | Verdict::Fail => {
                if check.verdict == Verdict::Pass {
                    stats.pass += 1;
                } else {
                    stats.fail += 1;
                }
                let lo = stats.worst_lower_margin.map_or(check.lower_margin, |m| m.min(check.lower_margin));
                let up = stats.worst_upper_margin.map_or(check.upper_margin, |m| m.min(check.upper_margin));
                stats.worst_lower_margin = Some(lo);
                stats.worst_upper_margin = Some(up);
            }
            Verdict::Informational => stats.informational += 1,
            Verdict::Inapplicable => stats.inapplicable += 1,
        }
    }
    stats
}

fn pass_fail(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Runs bounds, case I (and optionally case II) elimination, the profile and
/// distance fits and the trajectory checks, and collects the verdicts.
pub fn run_report(b: &NashBranch, opts: &ReportOptions) -> Result<ReportBundle, ReportError> {
    let n = b.n();
    let d = b.degree_at().max(1);
    let assumptions = branch_assumptions(b, &opts.assumptions);
    let bounds = bound_report(n as u32, d, &assumptions, None)?;

    let case_i = curve_stage(b, || build_case_i_system(b.polynomial(), opts.route), opts);
    let case_ii = opts.case_ii_radius.map(|r| {
        curve_stage(
            b,
            || {
                let center = exact_point(b.center())?;
                let r = exact_point(&[r])?.remove(0);
                build_case_ii_system(b.polynomial(), &r, &center, opts.route)
            },
            opts,
        )
    });

    let popts = ProfileOptions { seed: opts.seed, ..opts.profile.clone() };
    let fit = Stage::from_result(sample_profile(b, &popts).and_then(|p| fit_exponent(&p, opts.fit_method)));

    let region = Region::ball(popts.center.clone().unwrap_or_else(|| b.center().to_vec()), popts.radius.unwrap_or(b.radius()));
    let dopts = DistanceOptions { seed: opts.seed, ..opts.distance.clone() };
    let v_sample = build_v_sample(b, &region, dopts.v_sample_size, dopts.seed).map_err(EmpiricalError::from);
    let distance = Stage::from_result(
        v_sample.as_ref().map_err(Clone::clone).and_then(|v| fit_distance_exponent_with(b, &region, v, &dopts)),
    );
    let flow = match (fit.ok(), &v_sample) {
        (Some(f), Ok(v)) if f.rho_hat >= 0.0 && f.rho_hat < 1.0 && f.c_hat > 0.0 => {
            Stage::Ok(flow_stage(b, &region, v, f.rho_hat, f.c_hat, opts.flow_starts, opts.seed))
        }
        (Some(f), Ok(_)) => Stage::Error(format!("fitted constants (rho {}, C {}) unusable", f.rho_hat, f.c_hat)),
        (None, _) => Stage::Error("no exponent fit".into()),
        (_, Err(e)) => Stage::Error(e.to_string()),
    };

    let verdicts = verdicts(&bounds, &case_i, &fit, &distance, &flow);
    Ok(ReportBundle {
        schema: SCHEMA,
        seed: opts.seed,
        branch: BranchSummary::of(b),
        bounds,
        case_i,
        case_ii,
        fit,
        distance,
        flow,
        verdicts,
    })
}

fn verdicts(
    bounds: &BoundReport,
    case_i: &Stage<CurveSummary>,
    fit: &Stage<ExponentFit>,
    distance: &Stage<DistanceFit>,
    flow: &Stage<FlowStats>,
) -> Vec<NamedVerdict> {
    let mut out = Vec::new();
    let best_rho = bounds.best_rho.to_f64();
    let rho = match fit.ok() {
        Some(f) => {
            let v = pass_fail(f.rho_hat <= best_rho);
            out.push(NamedVerdict::new("rho-bound", v, format!("rho_hat {} vs bound {}", f.rho_hat, bounds.best_rho)));
            Some(v)
        }
        None => {
            out.push(NamedVerdict::new("rho-bound", Verdict::Inapplicable, "no exponent fit".into()));
            None
        }
    };
    let best_alpha = rational_to_f64(&bounds.best_dist_exponent());
    let alpha = match distance.ok() {
        Some(df) => {
            let v = pass_fail(df.alpha_hat <= best_alpha);
            out.push(NamedVerdict::new("dist-bound", v, format!("alpha_hat {} vs bound {}", df.alpha_hat, best_alpha)));
            Some(v)
        }
        None => {
            out.push(NamedVerdict::new("dist-bound", Verdict::Inapplicable, "no distance fit".into()));
            None
        }
    };
    let sandwich = match flow.ok() {
        Some(s) => {
            let v = if s.fail > 0 {
                Verdict::Fail
            } else if s.pass > 0 {
                Verdict::Pass
            } else {
                Verdict::Informational
            };
            let detail = format!(
                "{} pass, {} fail, {} outside the U region, {} not reaching the zero level, {} errors",
                s.pass, s.fail, s.informational, s.inapplicable, s.errors
            );
            out.push(NamedVerdict::new("flow-sandwich", v, detail));
            Some(v)
        }
        None => {
            out.push(NamedVerdict::new("flow-sandwich", Verdict::Inapplicable, "no flow checks".into()));
            None
        }
    };
    match (case_i.ok(), fit.ok()) {
        (Some(c), Some(f)) => {
            let bound = c.degree_bound_f64();
            let near = c.slopes.iter().filter_map(|s| s.parse::<BigRational>().ok()).any(|s| {
                (rational_to_f64(&s) - f.rho_hat).abs() <= FIT_SLACK
            });
            out.push(NamedVerdict::new(
                "curve-bound",
                pass_fail(f.rho_hat <= bound + FIT_SLACK),
                format!("rho_hat {} vs degree bound {} (slack {FIT_SLACK})", f.rho_hat, c.lemma58),
            ));
            out.push(NamedVerdict::new(
                "slope-match",
                Verdict::Informational,
                format!("rho_hat {} {} a slope candidate {:?}", f.rho_hat, if near { "matches" } else { "misses" }, c.slopes),
            ));
        }
        (None, _) => out.push(NamedVerdict::new("curve-bound", Verdict::Inapplicable, "no plane curve".into())),
        (_, None) => out.push(NamedVerdict::new("curve-bound", Verdict::Inapplicable, "no exponent fit".into())),
    }
    let consistency = match (rho, alpha, sandwich) {
        (Some(Verdict::Fail), _, _) | (_, Some(Verdict::Fail), _) | (_, _, Some(Verdict::Fail)) => Verdict::Fail,
        (Some(Verdict::Pass), Some(Verdict::Pass), Some(Verdict::Pass | Verdict::Informational)) => Verdict::Pass,
        _ => Verdict::Inapplicable,
    };
    out.push(NamedVerdict::new(
        "theorem-consistency",
        consistency,
        "rho-bound, dist-bound and flow-sandwich combined".into(),
    ));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffdegAudit {
    pub k: ExactValue,
    pub source: String,
    pub beta_hat: f64,
    pub c_hat: f64,
    /// `(k - 1) - beta_hat`.
    pub margin: f64,
    pub verdict: Verdict,
    pub fit: DistanceFit,
}

/// Fits `|grad f| >= C dist(x, Z)^beta` and compares `beta` with `k - 1`.
pub fn suffdeg_audit(
    b: &NashBranch,
    k: &ExactValue,
    source: &str,
    region: &Region,
    opts: &DistanceOptions,
) -> Result<SuffdegAudit, ReportError> {
    let kv = k.to_rational();
    if kv < BigRational::from_integer(2.into()) {
        return Err(ReportError::BadK(kv.to_integer().to_u64().unwrap_or(0)));
    }
    let fit = crate::empirical::fit_distance_exponent(b, region, &DistanceOptions { use_gradient: true, ..opts.clone() })?;
    let margin = rational_to_f64(&kv) - 1.0 - fit.alpha_hat;
    Ok(SuffdegAudit {
        k: k.clone(),
        source: source.into(),
        beta_hat: fit.alpha_hat,
        c_hat: fit.c_hat,
        margin,
        verdict: pass_fail(margin >= 0.0),
        fit,
    })
}

/// The sufficiency degree for the branch's `(n, d)` and hypotheses.
pub fn branch_sufficiency(b: &NashBranch, extra: &Assumptions) -> Result<(ExactValue, String), ReportError> {
    let a = branch_assumptions(b, extra);
    let s = sufficiency_degree(b.n() as u32, b.degree_at().max(1), &a)?;
    Ok((s.k, s.source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nash::BranchSpec;

    fn circle() -> NashBranch {
        NashBranch::from_spec(&BranchSpec {
            p: "y - x1^2 - x2^2".into(),
            vars: 2,
            seed_x: vec![0.0, 0.0],
            seed_y: 0.0,
            radius: 1.0,
        })
        .unwrap()
    }

    fn quick() -> ReportOptions {
        let mut o = ReportOptions::default();
        o.profile.starts = 8;
        o.profile.levels = 8;
        o.eliminate.profile.starts = 8;
        o.distance = DistanceOptions { v_sample_size: 200, directions: 32, scales: 16, ..Default::default() };
        o.flow_starts = 8;
        o
    }

    #[test]
    fn circle_report_passes_and_round_trips() {
        let r = run_report(&circle(), &quick()).unwrap();
        let c = r.case_i.ok().unwrap();
        assert_eq!(c.q, "u - 4*y");
        assert_eq!(c.lemma58, "1/2");
        assert!((r.fit.ok().unwrap().rho_hat - 0.5).abs() < 0.01);
        assert!(!r.any_fail(), "{:#?}", r.verdicts);
        assert_eq!(r.verdict("theorem-consistency").unwrap().verdict, Verdict::Pass);
        let text = serde_json::to_string(&r).unwrap();
        let back: ReportBundle = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn suffdeg_on_paraboloid() {
        let b = circle();
        let (k, src) = branch_sufficiency(&b, &Assumptions::default()).unwrap();
        let region = Region::ball(vec![0.0, 0.0], 1.0);
        let opts = DistanceOptions { v_sample_size: 200, directions: 32, scales: 16, ..Default::default() };
        let a = suffdeg_audit(&b, &k, &src, &region, &opts).unwrap();
        assert!((a.beta_hat - 1.0).abs() < 0.05, "{}", a.beta_hat);
        assert_eq!(a.verdict, Verdict::Pass);
        let two = ExactValue::Integer(2u32.into());
        assert!(suffdeg_audit(&b, &ExactValue::Integer(1u32.into()), "", &region, &opts).is_err());
        assert_eq!(suffdeg_audit(&b, &two, "", &region, &opts).unwrap().verdict, Verdict::Pass);
    }
}
