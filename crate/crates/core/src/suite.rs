//! Verification suites over a model: every identity check of the crate,
//! grouped, run in a fixed order and stamped with the model digest.

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::algebra::{Mat, C64};
use crate::cochain::{boundary, entireness_diagnostic, jlo_cocycle_with_budget, lemma34_check, ordered_integral, tau_eval};
use crate::dynamics::{unit_element, ComplexTime, GradedSystem};
use crate::error::{Error, Result};
use crate::kernels::{chain_budget, simplex_quadrature, QuadratureKind, SimplexQuadratureRule};
use crate::model::{build_model, BuiltModel, ModelSpec};
use crate::perturbation::{
    context_invariants_check, dyson_alpha, dyson_gamma_one, endpoint_check, f_identities_check, homotopy_check,
    homotopy_reports, lemma43_check, tube_identities_check, lipschitz_check, perturbed_functional, skms_check_perturbed,
    transgression_g, witten_invariance_check, GammaTime, PerturbedContext, SeriesControl,
};
use crate::report::{MaxResidual, VerificationReport};
use crate::sample::{random_even, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Axioms,
    Cocycle,
    Lemma34,
    Perturbation,
    Homotopy,
    Entireness,
    All,
}

impl Suite {
    pub const PARTS: [Suite; 6] = [
        Suite::Axioms,
        Suite::Cocycle,
        Suite::Lemma34,
        Suite::Perturbation,
        Suite::Homotopy,
        Suite::Entireness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Cocycle => "cocycle",
            Suite::Lemma34 => "lemma34",
            Suite::Perturbation => "perturbation",
            Suite::Homotopy => "homotopy",
            Suite::Entireness => "entireness",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Suite::PARTS
            .iter()
            .chain(std::iter::once(&Suite::All))
            .copied()
            .find(|x| x.name() == lower)
            .ok_or_else(|| Error::OutOfRange(format!("unknown suite {s:?}")))
    }
}

/// Exact algebraic identities.
pub const TOL_EXACT: f64 = 1e-10;
/// Checks backed by quadrature or long chain sums.
pub const TOL_QUADRATURE: f64 = 1e-8;
/// Second-order finite differences.
pub const TOL_FINITE_DIFFERENCE: f64 = 1e-6;

/// Step sequence for the homotopy derivative.
pub const HOMOTOPY_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
pub const MIN_HOMOTOPY_ORDER: f64 = 1.9;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// Overrides every per-check default tolerance when set.
    pub tol: Option<f64>,
    pub max_degree: usize,
    /// Fixed Dyson truncation order; adaptive to 1e-12 when unset.
    pub series_order: Option<usize>,
    pub quadrature: SimplexQuadratureRule,
    pub seed: u64,
    pub samples: usize,
    /// Worker threads; 0 uses the global pool.
    pub jobs: usize,
    /// Fills `wall_ms`; off by default so reports stay byte-reproducible.
    pub record_wall_time: bool,
    /// Chain-term budget for the cocycle checks; the environment default when unset.
    pub chain_budget: Option<u128>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            tol: None,
            max_degree: 5,
            series_order: None,
            quadrature: SimplexQuadratureRule::gauss(12),
            seed: 0,
            samples: 50,
            jobs: 0,
            record_wall_time: false,
            chain_budget: None,
        }
    }
}

impl SuiteConfig {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn budget(&self) -> u128 {
        self.chain_budget.unwrap_or_else(chain_budget)
    }

    fn series_control(&self) -> SeriesControl {
        match self.series_order {
            Some(n) => SeriesControl::Order(n),
            None => SeriesControl::Tolerance(1e-12),
        }
    }
}

type CheckFn<'a> = Box<dyn Fn() -> Vec<VerificationReport> + Send + Sync + 'a>;

struct Check<'a> {
    run: CheckFn<'a>,
}

fn check<'a>(f: impl Fn() -> Vec<VerificationReport> + Send + Sync + 'a) -> Check<'a> {
    Check { run: Box::new(f) }
}

pub fn run_suite(spec: &ModelSpec, suite: Suite, cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let model = build_model(spec)?;
    run_suite_on(&model, suite, cfg)
}

pub fn run_suite_on(model: &BuiltModel, suite: Suite, cfg: &SuiteConfig) -> Result<Vec<VerificationReport>> {
    let parts: Vec<Suite> = match suite {
        Suite::All => Suite::PARTS.to_vec(),
        s => vec![s],
    };
    let mut checks = Vec::new();
    for part in parts {
        checks.extend(match part {
            Suite::Axioms => axioms(model, cfg),
            Suite::Cocycle => cocycle(model, cfg),
            Suite::Lemma34 => lemma34(model, cfg),
            Suite::Perturbation => perturbation(model, cfg),
            Suite::Homotopy => homotopy(model, cfg),
            Suite::Entireness => entireness(model, cfg),
            Suite::All => unreachable!(),
        });
    }
    let run = || -> Vec<Vec<VerificationReport>> {
        checks
            .par_iter()
            .map(|c| {
                let start = Instant::now();
                let mut reports = (c.run)();
                let ms = if cfg.record_wall_time {
                    start.elapsed().as_millis() as u64
                } else {
                    0
                };
                for r in &mut reports {
                    r.model_digest = model.digest.clone();
                    r.wall_ms = ms;
                }
                reports
            })
            .collect()
    };
    let grouped = if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::OutOfRange(format!("thread pool: {e}")))?
            .install(run)
    } else {
        run()
    };
    Ok(grouped.into_iter().flatten().collect())
}

/// The suite exits successfully only if this holds.
pub fn all_passed(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.passed)
}

fn unit_evens(sys: &GradedSystem, k: usize, r: &mut crate::sample::SeededRng) -> Vec<Mat> {
    (0..k)
        .map(|_| {
            let x = random_even(sys.grading(), r).into_matrix();
            let n = crate::algebra::operator_norm(&x);
            x / C64::new(n, 0.0)
        })
        .collect()
}

fn axioms<'a>(model: &'a BuiltModel, cfg: &'a SuiteConfig) -> Vec<Check<'a>> {
    let sys = &model.system;
    vec![
        check(move || sys.verify_skms_axioms(cfg.samples, cfg.seed, cfg.tol(TOL_EXACT))),
        check(move || {
            let one = sys.grading().identity();
            let tol = cfg.tol(1e-12);
            let res = |name, v: Result<C64>| match v {
                Ok(v) => VerificationReport::new(name, "normalization", 1, (v - 1.0).norm(), tol, cfg.seed),
                Err(e) => VerificationReport::failed_to_run(name, "normalization", tol, cfg.seed, &e),
            };
            vec![
                res("phi_of_one", Ok(sys.skms_eval(&one))),
                res("tau0_of_one", tau_eval(sys, 0, std::slice::from_ref(&one))),
            ]
        }),
    ]
}

const ANCHOR_COCYCLE: &str = "(B + b) tau = 0";
const ANCHOR_DEGENERATE: &str = "normalized cochains";
const ANCHOR_CHAIN: &str = "simplex chain integral";

fn cocycle<'a>(model: &'a BuiltModel, cfg: &'a SuiteConfig) -> Vec<Check<'a>> {
    let sys = &model.system;
    let mut out = Vec::new();
    for n in [1usize, 3, 5].into_iter().filter(|&n| n <= cfg.max_degree) {
        out.push(check(move || {
            let name = format!("cocycle_degree_{n}");
            let tol = cfg.tol(TOL_QUADRATURE);
            let dtau = boundary(&jlo_cocycle_with_budget(sys.clone(), n + 1, cfg.budget()));
            let mut r = rng(cfg.seed ^ ((n as u64) << 32));
            let mut res = MaxResidual::default();
            for _ in 0..cfg.samples {
                let xs = unit_evens(sys, n + 1, &mut r);
                match dtau.eval(n, &xs) {
                    Ok(v) => res.push(v.norm()),
                    Err(e) => return vec![VerificationReport::failed_to_run(&name, ANCHOR_COCYCLE, tol, cfg.seed, &e)],
                }
            }
            vec![VerificationReport::new(&name, ANCHOR_COCYCLE, res.count(), res.value(), tol, cfg.seed)]
        }));
    }
    out.push(check(move || {
        let g = sys.grading();
        let tol = cfg.tol(TOL_EXACT);
        let mut r = rng(cfg.seed);
        let mut worst = 0.0f64;
        let mut count = 0;
        for n in [2usize, 4].into_iter().filter(|&n| n <= cfg.max_degree.max(2)) {
            for slot in 1..=n {
                let mut xs: Vec<_> = (0..=n).map(|_| random_even(g, &mut r)).collect();
                xs[slot] = g.scale(C64::new(1.5, -0.5), &g.identity());
                match tau_eval(sys, n, &xs) {
                    Ok(v) => worst = worst.max(v.norm()),
                    Err(e) => {
                        return vec![VerificationReport::failed_to_run("tau_degeneracy", ANCHOR_DEGENERATE, tol, cfg.seed, &e)]
                    }
                }
                count += 1;
            }
        }
        vec![VerificationReport::new("tau_degeneracy", ANCHOR_DEGENERATE, count, worst, tol, cfg.seed).require(worst == 0.0)]
    }));
    out.push(check(move || chain_cross_check(sys, cfg)));
    out
}

/// `Tr(Γ x_0 e^{-s_1 H} x_1 e^{-(s_2-s_1) H} ⋯ x_n e^{-(1-s_n) H}) / Z` in the eigenbasis.
fn chain_integrand(sys: &GradedSystem, xs_eig: &[Mat], s: &[f64]) -> C64 {
    let spec = sys.spectrum();
    let lam = spec.values();
    let d = sys.dim();
    let gamma = spec.to_eigenbasis(sys.grading().matrix());
    let mut acc = &gamma * &xs_eig[0];
    let mut prev = 0.0;
    for (k, x) in xs_eig.iter().enumerate().skip(1) {
        let w = s[k - 1] - prev;
        prev = s[k - 1];
        for j in 0..d {
            let f = (-w * lam[j]).exp();
            for i in 0..d {
                acc[(i, j)] *= f;
            }
        }
        acc *= x;
    }
    let w = 1.0 - prev;
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..d {
        tr += acc[(i, i)] * (-w * lam[i]).exp();
    }
    tr / sys.witten_index()
}

fn chain_cross_check(sys: &GradedSystem, cfg: &SuiteConfig) -> Vec<VerificationReport> {
    let rule = &cfg.quadrature;
    let mc = rule.kind == QuadratureKind::MonteCarlo;
    let (name, tol) = if mc {
        ("chain_vs_monte_carlo", cfg.tol(3.0))
    } else {
        ("chain_vs_gauss_quadrature", cfg.tol(TOL_QUADRATURE))
    };
    let mut r = rng(cfg.seed.wrapping_add(17));
    let mut res = MaxResidual::default();
    for n in 1..=cfg.max_degree.clamp(1, 3) {
        let xs: Vec<Mat> = (0..=n).map(|_| unit_element(sys.grading(), &mut r).into_matrix()).collect();
        let eig: Vec<Mat> = xs.iter().map(|x| sys.spectrum().to_eigenbasis(x)).collect();
        let exact = match ordered_integral(sys, &xs, cfg.budget()) {
            Ok(v) => v,
            Err(e) => return vec![VerificationReport::failed_to_run(name, ANCHOR_CHAIN, tol, cfg.seed, &e)],
        };
        match simplex_quadrature(|s| chain_integrand(sys, &eig, s), n, rule) {
            Ok((v, se)) if mc => res.push((v - exact).norm() / se.max(f64::MIN_POSITIVE)),
            Ok((v, _)) => res.push((v - exact).norm()),
            Err(e) => return vec![VerificationReport::failed_to_run(name, ANCHOR_CHAIN, tol, cfg.seed, &e)],
        }
    }
    let detail = if mc {
        "residual in standard errors"
    } else {
        "absolute difference"
    };
    vec![VerificationReport::new(name, ANCHOR_CHAIN, res.count(), res.value(), tol, cfg.seed).with_detail(detail)]
}

fn lemma34<'a>(model: &'a BuiltModel, cfg: &'a SuiteConfig) -> Vec<Check<'a>> {
    let sys = &model.system;
    (1..=cfg.max_degree.clamp(1, 3))
        .map(|n| {
            check(move || {
                let samples = cfg.samples.clamp(1, 10);
                let mut reports = lemma34_check(sys, n, samples, cfg.seed, cfg.tol(TOL_QUADRATURE), &cfg.quadrature);
                for rep in &mut reports {
                    rep.identity_name = format!("{}_degree_{n}", rep.identity_name);
                }
                reports
            })
        })
        .collect()
}

const ANCHOR_DYSON: &str = "Dyson expansion of the perturbed dynamics";

fn context(model: &BuiltModel, r: f64) -> Result<PerturbedContext> {
    PerturbedContext::new(model.system.clone(), model.perturbation.clone(), r)
}

fn with_context(
    model: &BuiltModel,
    r: f64,
    name: &str,
    tol: f64,
    seed: u64,
    f: impl FnOnce(&PerturbedContext) -> Vec<VerificationReport>,
) -> Vec<VerificationReport> {
    match context(model, r) {
        Ok(ctx) => f(&ctx),
        Err(e) => vec![VerificationReport::failed_to_run(name, ANCHOR_DYSON, tol, seed, &e)],
    }
}

fn perturbation<'a>(model: &'a BuiltModel, cfg: &'a SuiteConfig) -> Vec<Check<'a>> {
    let sys = &model.system;
    let q = &model.perturbation;
    vec![
        check(move || {
            let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
            vec![witten_invariance_check(sys, q, &grid, cfg.tol(TOL_EXACT), cfg.seed)]
        }),
        check(move || vec![lipschitz_check(sys, q, 100, cfg.seed)]),
        check(move || {
            let tol = cfg.tol(TOL_EXACT);
            with_context(model, 0.5, "context_invariants", tol, cfg.seed, |ctx| {
                context_invariants_check(ctx, cfg.samples, cfg.seed, tol)
            })
        }),
        check(move || {
            let tol = cfg.tol(1e-11);
            with_context(model, 0.5, "gamma_r_identities", tol, cfg.seed, |ctx| {
                lemma43_check(ctx, &[0.3, 1.0], cfg.samples, cfg.seed, tol)
            })
        }),
        check(move || {
            let tol = cfg.tol(1e-9);
            with_context(model, 1.0, "perturbed_skms", tol, cfg.seed, |ctx| {
                skms_check_perturbed(ctx, cfg.samples, cfg.seed, tol)
            })
        }),
        check(move || tube_identities_check(sys, 3, cfg.samples, cfg.seed, cfg.tol(TOL_EXACT))),
        check(move || {
            let tol = cfg.tol(1e-9);
            let mut out = Vec::new();
            for r in [0.0, 0.5, 1.0] {
                out.extend(with_context(model, r, "f_identities", tol, cfg.seed, |ctx| {
                    f_identities_check(ctx, 3.min(cfg.max_degree.max(1)), cfg.samples, cfg.seed, tol)
                }));
            }
            out
        }),
        check(move || dyson_fidelity(model, cfg)),
    ]
}

/// Series against exact oracles; the residual is the error divided by the
/// series' own bound (tail plus quadrature), so it passes at ratio ≤ 1.
fn dyson_fidelity(model: &BuiltModel, cfg: &SuiteConfig) -> Vec<VerificationReport> {
    let control = cfg.series_control();
    let mut r = rng(cfg.seed.wrapping_add(29));
    let mut alpha = MaxResidual::default();
    let mut gamma = MaxResidual::default();
    let mut gamma_i = MaxResidual::default();
    let mut functional = MaxResidual::default();
    let ratio = |err: f64, bound: f64| if err == 0.0 { 0.0 } else { err / bound };
    let mut run = || -> Result<()> {
        for rr in [0.25, 0.5, 1.0] {
            let ctx = context(model, rr)?;
            for t in [-1.0, 0.4, 1.0] {
                let x = unit_element(model.system.grading(), &mut r).into_matrix();
                let s = dyson_alpha(&ctx, &x, t, control)?;
                let exact = ctx.alpha_r_exact(&x, ComplexTime::real(t));
                alpha.push(ratio(
                    crate::algebra::operator_norm(&(s.value - exact)),
                    s.tail_bound + s.quadrature_error,
                ));
                let g = dyson_gamma_one(&ctx, GammaTime::Real(t), control)?;
                gamma.push(ratio(
                    crate::algebra::operator_norm(&(g.value - ctx.gamma_r_one_exact(t))),
                    g.tail_bound + g.quadrature_error,
                ));
            }
            let g = dyson_gamma_one(&ctx, GammaTime::ImaginaryUnit, control)?;
            gamma_i.push(ratio(
                crate::algebra::operator_norm(&(g.value - ctx.gamma_r_i_exact())),
                g.tail_bound + g.quadrature_error,
            ));
            let x = unit_element(model.system.grading(), &mut r).into_matrix();
            let v = perturbed_functional(&ctx, &x, 1e-12)?;
            functional.push(ratio((v.series - v.exact).norm(), v.error_bound));
        }
        Ok(())
    };
    if let Err(e) = run() {
        return vec![VerificationReport::failed_to_run("dyson_fidelity", ANCHOR_DYSON, 1.0, cfg.seed, &e)];
    }
    let rep = |name: &str, m: &MaxResidual| {
        VerificationReport::new(name, ANCHOR_DYSON, m.count(), m.value(), 1.0, cfg.seed)
            .with_detail("residual is error/(tail bound + quadrature error)")
    };
    vec![
        rep("dyson_alpha_fidelity", &alpha),
        rep("dyson_gamma_real_time_fidelity", &gamma),
        rep("dyson_gamma_imaginary_unit_fidelity", &gamma_i),
        rep("perturbed_functional_series", &functional),
    ]
}

const ANCHOR_HOMOTOPY: &str = "perturbed cocycles differ by a coboundary";

/// Central-difference homotopy reports at coupling `r` and even degree
/// `degree` over `tuples` random tuples, plus the degree-zero derivative and
/// the endpoint integral over `[0, 1]`.
pub fn homotopy_run(model: &BuiltModel, r: f64, degree: usize, tuples: usize, cfg: &SuiteConfig) -> Vec<VerificationReport> {
    let tol = cfg.tol(TOL_FINITE_DIFFERENCE);
    let seed = cfg.seed;
    let fail = |name: &str, e: &Error| VerificationReport::failed_to_run(name, ANCHOR_HOMOTOPY, tol, seed, e);
    if degree % 2 == 1 || tuples == 0 {
        let e = Error::InvalidDegree {
            degree,
            reason: "the homotopy check needs an even degree and at least one tuple",
        };
        return vec![fail("homotopy_derivative", &e)];
    }
    let ctx = match context(model, r) {
        Ok(c) => c,
        Err(e) => return vec![fail("homotopy_derivative", &e)],
    };
    let mut rr = rng(seed.wrapping_add(41));
    let xs_list: Vec<Vec<Mat>> = (0..tuples).map(|_| unit_evens(&model.system, degree + 1, &mut rr)).collect();
    let mut outcomes = Vec::new();
    for xs in &xs_list {
        match homotopy_check(&ctx, degree, xs, &HOMOTOPY_STEPS) {
            Ok(o) => outcomes.push(o),
            Err(e) => return vec![fail("homotopy_derivative", &e)],
        }
    }
    let flipped = outcomes.iter().any(|o| o.global_sign_flip_detected);
    let mut out = homotopy_reports(&outcomes, tol, MIN_HOMOTOPY_ORDER, seed);

    let one = vec![Mat::identity(model.system.dim(), model.system.dim())];
    out.push(match homotopy_check(&ctx, 0, &one, &HOMOTOPY_STEPS) {
        Ok(o) => VerificationReport::new(
            "homotopy_degree_zero",
            ANCHOR_HOMOTOPY,
            o.steps.len(),
            o.final_residual().max(o.boundary.norm()),
            tol,
            seed,
        ),
        Err(e) => fail("homotopy_degree_zero", &e),
    });

    out.push(match endpoint_check(&model.system, &model.perturbation, degree, &xs_list[0], 11) {
        Ok(e) => {
            let oriented = if flipped { e.flipped_residual } else { e.literal_residual };
            VerificationReport::new("homotopy_endpoint", ANCHOR_HOMOTOPY, 11, oriented, tol, seed)
                .with_detail(format!("Simpson on 11 nodes, literal-sign residual {:e}", e.literal_residual))
        }
        Err(e) => fail("homotopy_endpoint", &e),
    });
    out
}

/// Witten index and `φʳ(1)` along `r = 0, 1/steps, …, 1`, the latter through
/// the Dyson series for `γʳ_i(1)`.
pub fn perturb_sweep(model: &BuiltModel, steps: usize, cfg: &SuiteConfig) -> Vec<VerificationReport> {
    let steps = steps.max(1);
    let z = model.system.witten_index();
    let mut out = Vec::with_capacity(2 * (steps + 1));
    let one = Mat::identity(model.system.dim(), model.system.dim());
    for k in 0..=steps {
        let r = k as f64 / steps as f64;
        let tag = |name: &str| format!("{name}@r={r:.4}");
        match context(model, r) {
            Ok(ctx) => {
                let tol = cfg.tol(TOL_EXACT);
                out.push(
                    VerificationReport::new(&tag("witten_index"), ANCHOR_PHI1, 1, (ctx.witten_index_r() - z).abs(), tol, cfg.seed)
                        .with_detail(format!("Z_r = {:.15}", ctx.witten_index_r())),
                );
                let tol = cfg.tol(TOL_QUADRATURE);
                out.push(match perturbed_functional(&ctx, &one, 1e-12) {
                    Ok(v) => VerificationReport::new(&tag("phi_r_of_one"), ANCHOR_PHI1, 1, (v.series - 1.0).norm(), tol, cfg.seed)
                        .with_detail(format!("series {:.15}, exact {:.15}", v.series.re, v.exact.re)),
                    Err(e) => VerificationReport::failed_to_run(&tag("phi_r_of_one"), ANCHOR_PHI1, tol, cfg.seed, &e),
                });
            }
            Err(e) => out.push(VerificationReport::failed_to_run(&tag("witten_index"), ANCHOR_PHI1, cfg.tol(TOL_EXACT), cfg.seed, &e)),
        }
    }
    for r in &mut out {
        r.model_digest = model.digest.clone();
    }
    out
}

const ANCHOR_PHI1: &str = "phi^r(1) = 1";

fn homotopy<'a>(model: &'a BuiltModel, cfg: &'a SuiteConfig) -> Vec<Check<'a>> {
    vec![
        check(move || homotopy_run(model, 0.5, 2, 3, cfg)),
        check(move || {
            let tol = cfg.tol(TOL_EXACT);
            let name = "transgression_degeneracy";
            with_context(model, 0.5, name, tol, cfg.seed, |ctx| {
                let g = model.system.grading();
                let mut r = rng(cfg.seed.wrapping_add(43));
                let mut worst = 0.0f64;
                let mut count = 0;
                for m in [1usize, 3] {
                    for slot in 1..=m {
                        let mut xs: Vec<_> = (0..=m).map(|_| random_even(g, &mut r)).collect();
                        xs[slot] = g.scale(C64::new(-2.0, 0.25), &g.identity());
                        match transgression_g(ctx, m, &xs) {
                            Ok(v) => worst = worst.max(v.norm()),
                            Err(e) => {
                                return vec![VerificationReport::failed_to_run(name, ANCHOR_DEGENERATE, tol, cfg.seed, &e)]
                            }
                        }
                        count += 1;
                    }
                }
                vec![VerificationReport::new(name, ANCHOR_DEGENERATE, count, worst, tol, cfg.seed).require(worst == 0.0)]
            })
        }),
    ]
}

const ANCHOR_ENTIRE: &str = "local entireness of tau";

/// Degrees sampled by the entireness trend.
pub fn entireness_degrees(cfg: &SuiteConfig) -> usize {
    cfg.max_degree.max(8) & !1
}

fn entireness<'a>(model: &'a BuiltModel, cfg: &'a SuiteConfig) -> Vec<Check<'a>> {
    vec![check(move || {
        let sys = &model.system;
        let tol = cfg.tol(TOL_EXACT);
        let name = "entireness_trend";
        let mut r = rng(cfg.seed.wrapping_add(53));
        let gens: Vec<_> = (0..2).map(|_| random_even(sys.grading(), &mut r)).collect();
        match entireness_diagnostic(sys, &gens, entireness_degrees(cfg), cfg.samples, cfg.seed) {
            Ok(est) => {
                let seq: Vec<f64> = est.iter().map(|e| e.root_sequence).collect();
                let worst_rise = seq.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
                let strict = seq.windows(2).all(|w| w[1] < w[0]);
                let listing: Vec<String> = est.iter().map(|e| format!("n={}: {:.6}", e.degree, e.root_sequence)).collect();
                vec![VerificationReport::new(name, ANCHOR_ENTIRE, cfg.samples, worst_rise.max(0.0), tol, cfg.seed)
                    .require(strict)
                    .with_detail(format!("n^(1/2) |tau_n|^(1/n): {}", listing.join(", ")))]
            }
            Err(e) => vec![VerificationReport::failed_to_run(name, ANCHOR_ENTIRE, tol, cfg.seed, &e)],
        }
    })]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::reports_to_json;

    /// Weakly coupled, so the sampled entireness sequence is already
    /// decreasing at low degree.
    fn small() -> ModelSpec {
        let m = crate::sample::gaussian_matrix(1, 2, &mut rng(3)).map(|v| v * 0.1);
        ModelSpec::rectangular_block(2, 1, m).with_perturbation_seed(4, 0.3)
    }

    fn quick() -> SuiteConfig {
        SuiteConfig {
            samples: 6,
            max_degree: 3,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn suite_names_parse() {
        for s in Suite::PARTS {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("ALL".parse::<Suite>().unwrap(), Suite::All);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn every_part_passes_on_a_small_model() {
        let spec = small();
        for s in Suite::PARTS {
            let reports = run_suite(&spec, s, &quick()).unwrap();
            assert!(!reports.is_empty());
            for r in &reports {
                assert!(r.passed, "{}: {} {} ({:?})", s.name(), r.identity_name, r.max_residual, r.detail);
                assert_eq!(r.model_digest, spec.digest());
                assert_eq!(r.wall_ms, 0);
            }
        }
    }

    #[test]
    fn homotopy_without_perturbation_is_trivial() {
        let spec = ModelSpec::rectangular_block_seeded(2, 1, 3);
        let reports = run_suite(&spec, Suite::Homotopy, &quick()).unwrap();
        assert!(all_passed(&reports));
        assert!(reports.iter().all(|r| r.detail.as_deref().is_none_or(|d| !d.contains("= true"))));
    }

    #[test]
    fn budget_errors_stay_local() {
        let model = build_model(&small()).unwrap();
        let cfg = SuiteConfig {
            samples: 2,
            max_degree: 5,
            chain_budget: Some(200),
            ..SuiteConfig::default()
        };
        let reports = run_suite_on(&model, Suite::Cocycle, &cfg).unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.identity_name.as_str()).collect();
        assert_eq!(
            names,
            ["cocycle_degree_1", "cocycle_degree_3", "cocycle_degree_5", "tau_degeneracy", "chain_vs_gauss_quadrature"]
        );
        assert!(reports[0].passed);
        for r in &reports[1..3] {
            assert!(!r.passed);
            assert!(r.detail.as_deref().unwrap().contains("budget"));
        }
        assert!(reports[3].passed);
    }

    #[test]
    fn zero_tolerance_fails_everything() {
        let cfg = SuiteConfig {
            tol: Some(0.0),
            ..quick()
        };
        let reports = run_suite(&small(), Suite::Axioms, &cfg).unwrap();
        assert!(reports.iter().all(|r| !r.passed));
    }

    #[test]
    fn order_and_bytes_are_independent_of_threads() {
        let one = SuiteConfig { jobs: 1, ..quick() };
        let four = SuiteConfig { jobs: 4, ..quick() };
        let a = reports_to_json(&run_suite(&small(), Suite::Lemma34, &one).unwrap()).unwrap();
        let b = reports_to_json(&run_suite(&small(), Suite::Lemma34, &four).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_and_standalone_homotopy() {
        let model = build_model(&small()).unwrap();
        let sweep = perturb_sweep(&model, 4, &quick());
        assert_eq!(sweep.len(), 10);
        assert!(all_passed(&sweep), "{sweep:?}");
        let h = homotopy_run(&model, 0.25, 2, 1, &quick());
        assert!(all_passed(&h), "{h:?}");
        assert!(!homotopy_run(&model, 0.5, 1, 1, &quick())[0].passed);
        assert!(!homotopy_run(&model, 0.999, 2, 1, &quick())[0].passed);
    }

    #[test]
    fn wall_time_is_opt_in() {
        let cfg = SuiteConfig {
            record_wall_time: true,
            ..quick()
        };
        let reports = run_suite(&small(), Suite::Cocycle, &cfg).unwrap();
        assert!(all_passed(&reports));
    }
}
