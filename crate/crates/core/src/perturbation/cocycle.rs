//! The perturbed JLO cocycle `τʳ`, the transgression cochain `Gʳ` and the
//! homotopy `dτʳ/dr = ∂Gʳ`.

use std::sync::Arc;

use super::{OddPerturbation, PerturbedContext};
use crate::algebra::{Element, Mat, Parity, C64};
use crate::cochain::{boundary, require_even, Cochain, CochainParity};
use crate::dynamics::{unit_element, GradedSystem};
use crate::error::{Error, Result};
use crate::kernels::{chain_budget, chain_integral};
use crate::report::{MaxResidual, VerificationReport};
use crate::sample::rng;

/// `Fʳ_n(x_0, …, x_n) = ∫_{Δ_n} φʳ(x_0 αʳ_{is_1}(x_1) ⋯ αʳ_{is_n}(x_n)) dⁿs`.
pub fn f_r_eval(ctx: &PerturbedContext, xs: &[Mat]) -> Result<C64> {
    let refs: Vec<&Mat> = xs.iter().collect();
    let v = chain_integral(ctx.spectrum_r(), &refs, ctx.base().grading(), chain_budget())?;
    Ok(v / ctx.base().witten_index())
}

fn check_even_elements(xs: &[Element], dim: usize) -> Result<()> {
    for (slot, x) in xs.iter().enumerate() {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.dim(),
            });
        }
        if x.parity() != Parity::Even {
            return Err(Error::ParityViolation {
                slot,
                expected: Parity::Even.name(),
                found: x.parity().name(),
            });
        }
    }
    Ok(())
}

fn check_arity(n: usize, len: usize) -> Result<()> {
    if len != n + 1 {
        return Err(Error::Arity {
            degree: n,
            expected: n + 1,
            found: len,
        });
    }
    Ok(())
}

pub(crate) fn tau_r_unchecked(ctx: &PerturbedContext, xs: &[Mat]) -> Result<C64> {
    let mut args = Vec::with_capacity(xs.len());
    args.push(xs[0].clone());
    args.extend(xs[1..].iter().map(|x| ctx.perturbed_superderivation(x)));
    f_r_eval(ctx, &args)
}

/// `τʳ_n = Fʳ_n(x_0, δ_r x_1, …, δ_r x_n)` on even arguments; zero at odd `n`.
pub fn tau_r_eval(ctx: &PerturbedContext, n: usize, xs: &[Element]) -> Result<C64> {
    check_arity(n, xs.len())?;
    if n % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    check_even_elements(xs, ctx.base().dim())?;
    if xs.iter().skip(1).any(|x| x.is_scalar()) {
        return Ok(C64::new(0.0, 0.0));
    }
    let mats: Vec<Mat> = xs.iter().map(|x| x.matrix().clone()).collect();
    tau_r_unchecked(ctx, &mats)
}

pub(crate) fn g_unchecked(ctx: &PerturbedContext, xs: &[Mat]) -> Result<C64> {
    let m = xs.len() - 1;
    let q = ctx.perturbation().matrix();
    let deltas: Vec<Mat> = xs[1..].iter().map(|x| ctx.perturbed_superderivation(x)).collect();
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..=m {
        let mut args = Vec::with_capacity(m + 2);
        args.push(xs[0].clone());
        args.extend_from_slice(&deltas[..k]);
        args.push(q.clone());
        args.extend_from_slice(&deltas[k..]);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * f_r_eval(ctx, &args)?;
    }
    Ok(acc)
}

/// `Gʳ_m(x_0, …, x_m) = Σ_{k=0}^{m} (-1)^k Fʳ_{m+1}(x_0, δ_r x_1, …, δ_r x_k, Q, δ_r x_{k+1}, …, δ_r x_m)`
/// for odd `m`; zero at even `m`.
pub fn transgression_g(ctx: &PerturbedContext, m: usize, xs: &[Element]) -> Result<C64> {
    check_arity(m, xs.len())?;
    if m.is_multiple_of(2) {
        return Ok(C64::new(0.0, 0.0));
    }
    check_even_elements(xs, ctx.base().dim())?;
    if xs.iter().skip(1).any(|x| x.is_scalar()) {
        return Ok(C64::new(0.0, 0.0));
    }
    let mats: Vec<Mat> = xs.iter().map(|x| x.matrix().clone()).collect();
    g_unchecked(ctx, &mats)
}

pub fn tau_r_cochain(ctx: Arc<PerturbedContext>, max_degree: usize) -> Cochain {
    Cochain::new(CochainParity::Even, max_degree, move |_, xs| {
        require_even(ctx.base().grading(), xs)?;
        tau_r_unchecked(&ctx, xs)
    })
}

pub fn transgression_cochain(ctx: Arc<PerturbedContext>, max_degree: usize) -> Cochain {
    Cochain::new(CochainParity::Odd, max_degree, move |_, xs| {
        require_even(ctx.base().grading(), xs)?;
        g_unchecked(&ctx, xs)
    })
}

const ANCHOR_F: &str = "F^r relations";

/// The relations between the `Fʳ_n` on random mixed-parity tuples, `n ≤ max_n`.
pub fn f_identities_check(
    ctx: &PerturbedContext,
    max_n: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Vec<VerificationReport> {
    let g = ctx.base().grading();
    let d = g.dim();
    let one = Mat::identity(d, d);
    let mut r = rng(seed);
    let mut f1 = MaxResidual::default();
    let mut f2 = MaxResidual::default();
    let mut f4 = MaxResidual::default();
    let mut f5 = MaxResidual::default();
    let mut f6 = MaxResidual::default();
    let f = |xs: &[Mat]| f_r_eval(ctx, xs);
    let d2 = |x: &Mat| ctx.perturbed_superderivation(&ctx.perturbed_superderivation(x));
    let mut run = |xs: &[Mat]| -> Result<()> {
        let n = xs.len() - 1;
        let base = f(xs)?;
        if n >= 1 {
            let mut rot = vec![g.conjugate(&xs[n])];
            rot.extend_from_slice(&xs[..n]);
            f1.push((base - f(&rot)?).norm());

            let mut last = xs.to_vec();
            last[n] = d2(&xs[n]);
            let mut merged = xs[..n].to_vec();
            merged[n - 1] = &xs[n - 1] * &xs[n];
            let mut wrapped = xs[..n].to_vec();
            wrapped[0] = g.conjugate(&xs[n]) * &xs[0];
            f4.push((f(&last)? - (f(&merged)? - f(&wrapped)?)).norm());
        }
        for k in 1..n {
            let mut inner = xs.to_vec();
            inner[k] = d2(&xs[k]);
            let mut left = Vec::with_capacity(n);
            left.extend_from_slice(&xs[..k - 1]);
            left.push(&xs[k - 1] * &xs[k]);
            left.extend_from_slice(&xs[k + 1..]);
            let mut right = Vec::with_capacity(n);
            right.extend_from_slice(&xs[..k]);
            right.push(&xs[k] * &xs[k + 1]);
            right.extend_from_slice(&xs[k + 2..]);
            f2.push((f(&inner)? - (f(&left)? - f(&right)?)).norm());
        }
        let mut sum5 = C64::new(0.0, 0.0);
        let mut sum6 = C64::new(0.0, 0.0);
        for j in 0..=n {
            let mut args = vec![one.clone()];
            args.extend_from_slice(&xs[j..]);
            args.extend(xs[..j].iter().map(|x| g.conjugate(x)));
            sum5 += f(&args)?;
            let mut args6: Vec<Mat> = xs[..j].iter().map(|x| g.conjugate(x)).collect();
            args6.push(ctx.perturbed_superderivation(&xs[j]));
            args6.extend_from_slice(&xs[j + 1..]);
            sum6 += f(&args6)?;
        }
        f5.push((sum5 - base).norm());
        f6.push(sum6.norm());
        Ok(())
    };
    for k in 0..samples {
        let n = 1 + k % max_n.max(1);
        let xs: Vec<Mat> = (0..=n).map(|_| unit_element(g, &mut r).into_matrix()).collect();
        if let Err(e) = run(&xs) {
            return vec![VerificationReport::failed_to_run("f_identities", ANCHOR_F, tol, seed, &e)];
        }
    }
    let detail = format!("r = {}, n <= {max_n}", ctx.r());
    vec![
        VerificationReport::new("f_rotation", ANCHOR_F, f1.count(), f1.value(), tol, seed).with_detail(detail.clone()),
        VerificationReport::new("f_inner_second_derivative", ANCHOR_F, f2.count(), f2.value(), tol, seed)
            .with_detail(detail.clone()),
        VerificationReport::new("f_last_second_derivative", ANCHOR_F, f4.count(), f4.value(), tol, seed)
            .with_detail(detail.clone()),
        VerificationReport::new("f_unit_insertion_sum", ANCHOR_F, f5.count(), f5.value(), tol, seed)
            .with_detail(detail.clone()),
        VerificationReport::new("f_graded_derivation_sum", ANCHOR_F, f6.count(), f6.value(), tol, seed)
            .with_detail(detail),
    ]
}

/// Comparison of the central difference of `τʳ_n` in `r` with `(∂Gʳ)_n`.
#[derive(Debug, Clone)]
pub struct HomotopyOutcome {
    pub r: f64,
    pub degree: usize,
    pub steps: Vec<f64>,
    pub derivative: Vec<C64>,
    pub boundary: C64,
    /// `|dτ/dr − ∂G|` per step.
    pub literal_residuals: Vec<f64>,
    /// `|dτ/dr + ∂G|` per step.
    pub flipped_residuals: Vec<f64>,
    /// `+1` when the displayed `Gʳ` matches, `-1` when `−Gʳ` does.
    pub orientation: f64,
    pub global_sign_flip_detected: bool,
    /// Smallest observed convergence order along the step sequence, for the
    /// selected orientation; infinite when residuals are at rounding level.
    pub observed_order: f64,
}

/// Residuals below this are treated as rounding noise when estimating orders.
const ORDER_FLOOR: f64 = 1e-13;

impl HomotopyOutcome {
    pub fn residuals(&self) -> &[f64] {
        if self.orientation > 0.0 {
            &self.literal_residuals
        } else {
            &self.flipped_residuals
        }
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals().last().copied().unwrap_or(f64::MAX)
    }
}

/// Pools homotopy outcomes over several tuples into the derivative report and
/// the sign-convention report.
pub fn homotopy_reports(outcomes: &[HomotopyOutcome], tol: f64, min_order: f64, seed: u64) -> Vec<VerificationReport> {
    let mut res = MaxResidual::default();
    let mut literal = MaxResidual::default();
    let mut unoriented = MaxResidual::default();
    let mut order = f64::INFINITY;
    for o in outcomes {
        res.push(o.final_residual());
        literal.push(o.literal_residuals.last().copied().unwrap_or(f64::MAX));
        let flipped = o.flipped_residuals.last().copied().unwrap_or(f64::MAX);
        unoriented.push(o.literal_residuals.last().copied().unwrap_or(f64::MAX).min(flipped));
        order = order.min(o.observed_order);
    }
    let flips = outcomes.iter().filter(|o| o.global_sign_flip_detected).count();
    let consistent = flips == 0 || flips == outcomes.len();
    let degrees: Vec<String> = outcomes.iter().map(|o| o.degree.to_string()).collect();
    vec![
        VerificationReport::new("homotopy_derivative", ANCHOR_MAIN, outcomes.len(), res.value(), tol, seed)
            .require(order >= min_order && !outcomes.is_empty())
            .with_detail(format!(
                "degrees [{}], minimum observed order {:.3}, literal-sign residual {:e}",
                degrees.join(", "),
                order,
                literal.value()
            )),
        VerificationReport::new(
            "transgression_sign_convention",
            ANCHOR_BOUNDARY,
            outcomes.len(),
            unoriented.value(),
            tol,
            seed,
        )
        .require(consistent)
        .with_detail(format!(
            "global_sign_flip_detected = {}; the displayed G^r satisfies dtau/dr = {}dG on {} of {} tuples",
            flips > 0,
            if flips > 0 { "-" } else { "+" },
            if flips > 0 { flips } else { outcomes.len() },
            outcomes.len()
        )),
    ]
}

const ANCHOR_MAIN: &str = "d tau^r / dr = boundary of G^r";
const ANCHOR_BOUNDARY: &str = "transgression cochain G^r";

/// `(∂Gʳ)_n` at the context's coupling.
pub fn boundary_of_g(ctx: &PerturbedContext, n: usize, xs: &[Mat]) -> Result<C64> {
    let g = transgression_cochain(Arc::new(ctx.clone()), n + 1);
    boundary(&g).eval(n, xs)
}

fn tau_r_at(ctx: &PerturbedContext, r: f64, xs: &[Mat]) -> Result<C64> {
    let c = ctx.at(r)?;
    tau_r_cochain(Arc::new(c), xs.len() - 1).eval(xs.len() - 1, xs)
}

/// Central differences `(τ^{r+h}_n − τ^{r−h}_n)/2h` against `(∂Gʳ)_n` over a
/// decreasing sequence of steps.
pub fn homotopy_check(ctx: &PerturbedContext, n: usize, xs: &[Mat], steps: &[f64]) -> Result<HomotopyOutcome> {
    check_arity(n, xs.len())?;
    require_even(ctx.base().grading(), xs)?;
    let r = ctx.r();
    for &h in steps {
        if !(h > 0.0) || r - h < 0.0 || r + h > 1.0 {
            return Err(Error::OutOfRange(format!("step h = {h} leaves [0, 1] around r = {r}")));
        }
    }
    let bnd = boundary_of_g(ctx, n, xs)?;
    let mut derivative = Vec::with_capacity(steps.len());
    let mut literal = Vec::with_capacity(steps.len());
    let mut flipped = Vec::with_capacity(steps.len());
    for &h in steps {
        let dv = (tau_r_at(ctx, r + h, xs)? - tau_r_at(ctx, r - h, xs)?) / (2.0 * h);
        derivative.push(dv);
        literal.push((dv - bnd).norm());
        flipped.push((dv + bnd).norm());
    }
    let lit_last = *literal.last().unwrap_or(&0.0);
    let flip_last = *flipped.last().unwrap_or(&0.0);
    let global_sign_flip_detected = flip_last < 0.1 * lit_last && lit_last > ORDER_FLOOR;
    let orientation = if global_sign_flip_detected { -1.0 } else { 1.0 };
    let chosen = if global_sign_flip_detected { &flipped } else { &literal };
    let mut observed_order = f64::INFINITY;
    for k in 1..steps.len() {
        let (a, b) = (chosen[k - 1], chosen[k]);
        if a <= ORDER_FLOOR || b <= ORDER_FLOOR {
            continue;
        }
        let order = (a / b).ln() / (steps[k - 1] / steps[k]).ln();
        observed_order = observed_order.min(order);
    }
    Ok(HomotopyOutcome {
        r,
        degree: n,
        steps: steps.to_vec(),
        derivative,
        boundary: bnd,
        literal_residuals: literal,
        flipped_residuals: flipped,
        orientation,
        global_sign_flip_detected,
        observed_order,
    })
}

/// `τ¹_n − τ⁰_n` against composite Simpson of `r ↦ (∂Gʳ)_n` on `nodes` points.
#[derive(Debug, Clone)]
pub struct EndpointOutcome {
    pub difference: C64,
    pub integral: C64,
    pub literal_residual: f64,
    pub flipped_residual: f64,
}

pub fn endpoint_check(
    base: &Arc<GradedSystem>,
    q: &OddPerturbation,
    n: usize,
    xs: &[Mat],
    nodes: usize,
) -> Result<EndpointOutcome> {
    if nodes < 3 || nodes.is_multiple_of(2) {
        return Err(Error::OutOfRange("Simpson's rule needs an odd node count >= 3".into()));
    }
    let ctx0 = PerturbedContext::new(base.clone(), q.clone(), 0.0)?;
    let h = 1.0 / (nodes - 1) as f64;
    let mut integral = C64::new(0.0, 0.0);
    for k in 0..nodes {
        let w = if k == 0 || k == nodes - 1 {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let ctx = ctx0.at(k as f64 * h)?;
        integral += boundary_of_g(&ctx, n, xs)? * (w * h / 3.0);
    }
    let difference = tau_r_at(&ctx0, 1.0, xs)? - tau_r_at(&ctx0, 0.0, xs)?;
    Ok(EndpointOutcome {
        difference,
        integral,
        literal_residual: (difference - integral).norm(),
        flipped_residual: (difference + integral).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::fixture;
    use super::*;
    use crate::cochain::tau_eval;
    use crate::sample::{random_even, random_odd};

    fn evens(ctx: &PerturbedContext, k: usize, seed: u64) -> Vec<Element> {
        let mut r = rng(seed);
        (0..k).map(|_| random_even(ctx.base().grading(), &mut r)).collect()
    }

    #[test]
    fn normalization_at_degree_zero() {
        let ctx = fixture(3, 1, 1, 0.5, 0.6);
        let one = ctx.base().grading().identity();
        assert!((f_r_eval(&ctx, &[one.matrix().clone()]).unwrap() - 1.0).norm() < 1e-12);
        assert!((tau_r_eval(&ctx, 0, &[one]).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn zero_coupling_reduces_to_tau() {
        let ctx = fixture(2, 1, 2, 0.5, 0.0);
        let xs = evens(&ctx, 3, 3);
        let a = tau_r_eval(&ctx, 2, &xs).unwrap();
        let b = tau_eval(ctx.base(), 2, &xs).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn perturbed_tau_is_a_cocycle() {
        let ctx = Arc::new(fixture(3, 1, 4, 0.5, 0.5));
        let dtau = boundary(&tau_r_cochain(ctx.clone(), 4));
        for n in [1, 3] {
            let xs: Vec<Mat> = evens(&ctx, n + 1, 5).into_iter().map(|x| x.into_matrix()).collect();
            assert!(dtau.eval(n, &xs).unwrap().norm() < 1e-9);
        }
    }

    #[test]
    fn transgression_degenerate_cases() {
        let ctx = fixture(2, 1, 6, 0.5, 0.4);
        let g = ctx.base().grading().clone();
        let mut xs = evens(&ctx, 2, 7);
        assert_ne!(transgression_g(&ctx, 1, &xs).unwrap(), C64::new(0.0, 0.0));
        xs[1] = g.scale(C64::new(-3.0, 0.5), &g.identity());
        assert_eq!(transgression_g(&ctx, 1, &xs).unwrap(), C64::new(0.0, 0.0));
        let no_q = PerturbedContext::new(ctx.base().clone(), OddPerturbation::zero(&g), 0.4).unwrap();
        let ys = evens(&ctx, 4, 8);
        assert_eq!(transgression_g(&no_q, 3, &ys).unwrap(), C64::new(0.0, 0.0));
        let odd = vec![ys[0].clone(), random_odd(&g, &mut rng(1))];
        assert!(transgression_g(&ctx, 1, &odd).is_err());
        assert_eq!(transgression_g(&ctx, 2, &ys[..3]).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn transgression_at_degree_one_matches_hand_expansion() {
        let ctx = fixture(2, 1, 9, 0.5, 0.0);
        let xs = evens(&ctx, 2, 10);
        let q = ctx.perturbation().matrix().clone();
        let dx1 = ctx.base().delta_mat(xs[1].matrix());
        let x0 = xs[0].matrix().clone();
        let expect = f_r_eval(&ctx, &[x0.clone(), q.clone(), dx1.clone()]).unwrap()
            - f_r_eval(&ctx, &[x0, dx1, q]).unwrap();
        assert!((transgression_g(&ctx, 1, &xs).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn f_identities_hold() {
        for r in [0.0, 0.5, 1.0] {
            let ctx = fixture(2, 1, 11, 0.5, r);
            for rep in f_identities_check(&ctx, 3, 6, 1, 1e-9) {
                assert!(rep.passed, "r={r} {} {}", rep.identity_name, rep.max_residual);
            }
        }
    }

    #[test]
    fn homotopy_converges_at_second_order() {
        let ctx = fixture(2, 1, 12, 0.3, 0.5);
        let xs: Vec<Mat> = evens(&ctx, 3, 13).into_iter().map(|x| x.into_matrix()).collect();
        let out = homotopy_check(&ctx, 2, &xs, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        assert!(out.observed_order >= 1.9, "{out:?}");
        assert!(out.final_residual() < 1e-6);
        assert!(ctx.at(0.995).is_ok());
        assert!(homotopy_check(&ctx.at(0.995).unwrap(), 2, &xs, &[1e-2]).is_err());
    }

    #[test]
    fn homotopy_is_trivial_without_perturbation() {
        let base = fixture(2, 1, 14, 0.3, 0.5);
        let g = base.base().grading().clone();
        let ctx = PerturbedContext::new(base.base().clone(), OddPerturbation::zero(&g), 0.5).unwrap();
        let xs: Vec<Mat> = evens(&ctx, 3, 15).into_iter().map(|x| x.into_matrix()).collect();
        let out = homotopy_check(&ctx, 2, &xs, &[1e-2, 5e-3]).unwrap();
        assert_eq!(out.boundary, C64::new(0.0, 0.0));
        assert!(out.final_residual() < 1e-12);
        assert!(!out.global_sign_flip_detected);
    }

    #[test]
    fn degree_zero_derivative_vanishes() {
        let ctx = fixture(2, 1, 16, 0.3, 0.5);
        let one = vec![Mat::identity(3, 3)];
        let out = homotopy_check(&ctx, 0, &one, &[1e-2, 5e-3]).unwrap();
        assert!(out.boundary.norm() < 1e-15);
        assert!(out.literal_residuals.iter().all(|r| *r < 1e-9));
    }

    #[test]
    fn endpoint_matches_integrated_boundary() {
        let ctx = fixture(2, 1, 17, 0.3, 0.0);
        let xs: Vec<Mat> = evens(&ctx, 3, 18).into_iter().map(|x| x.into_matrix()).collect();
        let out = endpoint_check(ctx.base(), ctx.perturbation(), 2, &xs, 11).unwrap();
        assert!(out.literal_residual.min(out.flipped_residual) < 1e-6, "{out:?}");
    }
}
