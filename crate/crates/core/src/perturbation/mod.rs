//! Perturbations `Q₀ → Q₀ + rQ` of a graded system by an odd selfadjoint `Q`.
//!
//! Every perturbed object has two evaluation paths: the Dyson and simplex
//! series in [`dyson`], and exact matrix functions of `H_r = (Q₀ + rQ)²`
//! here. The checks compare them, and [`cocycle`] builds the perturbed JLO
//! cocycle and its transgression on top.

pub mod cocycle;
pub mod dyson;

use std::sync::Arc;

use rand::Rng;

use crate::algebra::{max_abs, operator_norm, Element, Grading, Mat, C64};
use crate::dynamics::{check_odd_selfadjoint, unit_element, ComplexTime, GradedSystem};
use crate::error::{Error, Result};
use crate::kernels::Spectrum;
use crate::report::{MaxResidual, VerificationReport};
use crate::sample::rng;

pub use cocycle::{
    boundary_of_g, endpoint_check, f_identities_check, f_r_eval, homotopy_check, tau_r_cochain, tau_r_eval,
    homotopy_reports, transgression_cochain, transgression_g, EndpointOutcome, HomotopyOutcome,
};
pub use dyson::{dyson_alpha, dyson_gamma_one, GammaTime, SeriesControl, SeriesEvaluation};

/// An odd selfadjoint element `Q`.
#[derive(Debug, Clone)]
pub struct OddPerturbation {
    q: Element,
}

impl OddPerturbation {
    pub fn new(g: &Grading, q: Mat) -> Result<Self> {
        check_odd_selfadjoint(g, q)
            .map(|q| Self { q })
            .map_err(Error::InvalidPerturbation)
    }

    pub fn zero(g: &Grading) -> Self {
        Self { q: g.zero() }
    }

    pub fn element(&self) -> &Element {
        &self.q
    }

    pub fn matrix(&self) -> &Mat {
        self.q.matrix()
    }
}

/// The perturbed system at coupling `r ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct PerturbedContext {
    base: Arc<GradedSystem>,
    q: OddPerturbation,
    r: f64,
    a_r: Mat,
    h_r: Mat,
    spectrum_r: Spectrum,
    gamma_eig_r: Mat,
    series_cap: usize,
}

/// Hard cap on Dyson series orders.
pub const DEFAULT_SERIES_CAP: usize = 40;

impl PerturbedContext {
    pub fn new(base: Arc<GradedSystem>, q: OddPerturbation, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::OutOfRange(format!("coupling r = {r} outside [0, 1]")));
        }
        if q.matrix().nrows() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                found: q.matrix().nrows(),
            });
        }
        let qm = q.matrix();
        let delta_q = base.delta_mat(qm);
        let a_r = delta_q * C64::new(r, 0.0) + qm * qm * C64::new(r * r, 0.0);
        let h_r = base.hamiltonian().matrix() + &a_r;
        let spectrum_r = Spectrum::of_hermitian(&h_r)?;
        let gamma_eig_r = spectrum_r.to_eigenbasis(base.grading().matrix());
        Ok(Self {
            base,
            q,
            r,
            a_r,
            h_r,
            spectrum_r,
            gamma_eig_r,
            series_cap: DEFAULT_SERIES_CAP,
        })
    }

    pub fn with_series_cap(mut self, cap: usize) -> Self {
        self.series_cap = cap;
        self
    }

    /// The same perturbation at another coupling.
    pub fn at(&self, r: f64) -> Result<Self> {
        Ok(Self::new(self.base.clone(), self.q.clone(), r)?.with_series_cap(self.series_cap))
    }

    pub fn base(&self) -> &Arc<GradedSystem> {
        &self.base
    }

    pub fn perturbation(&self) -> &OddPerturbation {
        &self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn series_cap(&self) -> usize {
        self.series_cap
    }

    /// `a_r = rδ(Q) + r²Q²`.
    pub fn a_r(&self) -> &Mat {
        &self.a_r
    }

    /// `H_r = H + a_r`.
    pub fn h_r(&self) -> &Mat {
        &self.h_r
    }

    pub fn spectrum_r(&self) -> &Spectrum {
        &self.spectrum_r
    }

    fn grading(&self) -> &Grading {
        self.base.grading()
    }

    /// `δ_r(x) = δ(x) + r(Qx − γ(x)Q)`.
    pub fn perturbed_superderivation(&self, x: &Mat) -> Mat {
        let q = self.q.matrix();
        let gx = self.grading().conjugate(x);
        self.base.delta_mat(x) + (q * x - gx * q) * C64::new(self.r, 0.0)
    }

    /// `αʳ_z(x) = e^{izH_r} x e^{-izH_r}`.
    pub fn alpha_r_exact(&self, x: &Mat, z: ComplexTime) -> Mat {
        if z.0 == C64::new(0.0, 0.0) {
            return x.clone();
        }
        let xt = self.spectrum_r.to_eigenbasis(x);
        self.spectrum_r
            .from_eigenbasis(&self.spectrum_r.flow_in_eigenbasis(&xt, z.0))
    }

    /// `γʳ_t(1) = e^{itH_r} e^{-itH}`.
    pub fn gamma_r_one_exact(&self, t: f64) -> Mat {
        let d = self.base.dim();
        if t == 0.0 {
            return Mat::identity(d, d);
        }
        let i = C64::new(0.0, 1.0);
        let u_r = self.spectrum_r.apply(|l| (i * t * l).exp());
        let u = self.base.spectrum().apply(|l| (-i * t * l).exp());
        u_r * u
    }

    /// `γʳ_t(x) = γʳ_t(1) α_t(x)`.
    pub fn gamma_r_exact(&self, x: &Mat, t: f64) -> Mat {
        let ax = self.base.heisenberg_flow(
            &self.grading().from_matrix_unchecked_parity(x.clone()),
            ComplexTime::real(t),
        );
        self.gamma_r_one_exact(t) * ax.matrix()
    }

    /// `γʳ_i(1) = e^{-H_r} e^{H}`.
    pub fn gamma_r_i_exact(&self) -> Mat {
        let heat_r = self.spectrum_r.apply(|l| C64::new((-l).exp(), 0.0));
        let anti = self.base.spectrum().apply(|l| C64::new(l.exp(), 0.0));
        heat_r * anti
    }

    /// `φʳ(x) = Tr(Γ x e^{-H_r})/Z` with the unperturbed `Z`.
    pub fn phi_r_exact(&self, x: &Mat) -> C64 {
        self.phi_r_eigenbasis(&self.spectrum_r.to_eigenbasis(x))
    }

    fn phi_r_eigenbasis(&self, xt: &Mat) -> C64 {
        let d = self.base.dim();
        let lam = self.spectrum_r.values();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            let w = (-lam[i]).exp();
            for j in 0..d {
                acc += self.gamma_eig_r[(i, j)] * xt[(j, i)] * w;
            }
        }
        acc / self.base.witten_index()
    }

    /// `Tr(Γe^{-H_r})`.
    pub fn witten_index_r(&self) -> f64 {
        let lam = self.spectrum_r.values();
        (0..self.base.dim())
            .map(|i| self.gamma_eig_r[(i, i)].re * (-lam[i]).exp())
            .sum()
    }

    /// `φ(x · γʳ_i(1))` along the series path.
    pub fn phi_r_series(&self, x: &Mat, tol: f64) -> Result<(C64, SeriesEvaluation)> {
        let g = dyson_gamma_one(self, GammaTime::ImaginaryUnit, SeriesControl::Tolerance(tol))?;
        let v = self.base.phi_mat(&(x * &g.value));
        Ok((v, g))
    }
}

/// Both evaluation paths of the perturbed functional.
#[derive(Debug, Clone)]
pub struct PerturbedFunctionalValue {
    pub series: C64,
    pub exact: C64,
    /// Truncation tail plus rounding allowance of the series path, scaled by
    /// `|φ|`-compatible norms.
    pub error_bound: f64,
}

/// `φʳ(x)` via `φ(x γʳ_i(1))` and via `Tr(Γ x e^{-H_r})/Z`.
pub fn perturbed_functional(ctx: &PerturbedContext, x: &Mat, tol: f64) -> Result<PerturbedFunctionalValue> {
    let (series, g) = ctx.phi_r_series(x, tol)?;
    let exact = ctx.phi_r_exact(x);
    // |φ(y)| ≤ Σ|Γ̃_{ij}| e^{-λ_i} ‖y‖ / |Z| ≤ d ‖y‖ / |Z|.
    let phi_norm = ctx.base.dim() as f64 / ctx.base.witten_index().abs();
    let error_bound = phi_norm * operator_norm(x) * (g.tail_bound + g.quadrature_error);
    Ok(PerturbedFunctionalValue {
        series,
        exact,
        error_bound,
    })
}

const ANCHOR_GAMMA_R: &str = "perturbed cocycle algebra gamma^r";
const ANCHOR_PERTURBED_SKMS: &str = "perturbed functional is sKMS";
const ANCHOR_TUBE: &str = "continuation and reflection identities";
const ANCHOR_DYSON_BOUNDS: &str = "Dyson perturbation bounds";
const ANCHOR_PHI1: &str = "phi^r(1) = 1";

/// The four algebraic identities for `γʳ` and `αʳ`, evaluated with the exact
/// oracles at `t ∈ times`.
pub fn lemma43_check(
    ctx: &PerturbedContext,
    times: &[f64],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Vec<VerificationReport> {
    let g = ctx.grading();
    let mut r = rng(seed);
    let mut cocycle = MaxResidual::default();
    let mut adjoint = MaxResidual::default();
    let mut unitary = MaxResidual::default();
    let mut conj = MaxResidual::default();
    let mut product = MaxResidual::default();
    let d = ctx.base.dim();
    let id = Mat::identity(d, d);
    for k in 0..samples {
        let t = times[k % times.len().max(1)];
        let s = 2.0 * r.random::<f64>() - 1.0;
        let x = unit_element(g, &mut r).into_matrix();
        let y = unit_element(g, &mut r).into_matrix();
        let alpha = |z: &Mat, tt: f64| {
            ctx.base
                .heisenberg_flow(&g.from_matrix_unchecked_parity(z.clone()), ComplexTime::real(tt))
                .into_matrix()
        };

        let lhs = ctx.gamma_r_exact(&x, t);
        let rhs = ctx.gamma_r_one_exact(s) * alpha(&ctx.gamma_r_exact(&x, t - s), s);
        cocycle.push(operator_norm(&(lhs - rhs)));

        let g1 = ctx.gamma_r_one_exact(t);
        adjoint.push(operator_norm(&(g1.adjoint() - alpha(&ctx.gamma_r_one_exact(-t), t))));
        unitary.push(operator_norm(&(&g1 * g1.adjoint() - &id)));

        let ar = ctx.alpha_r_exact(&x, ComplexTime::real(t));
        conj.push(operator_norm(&(&ar - &g1 * alpha(&x, t) * g1.adjoint())));

        let lhs4 = &ar * ctx.gamma_r_exact(&y, t);
        product.push(operator_norm(&(lhs4 - ctx.gamma_r_exact(&(&x * &y), t))));
    }
    vec![
        VerificationReport::new("gamma_r_cocycle", ANCHOR_GAMMA_R, samples, cocycle.value(), tol, seed),
        VerificationReport::new("gamma_r_adjoint", ANCHOR_GAMMA_R, samples, adjoint.value(), tol, seed),
        VerificationReport::new("gamma_r_unitary", ANCHOR_GAMMA_R, samples, unitary.value(), tol, seed),
        VerificationReport::new("alpha_r_conjugation", ANCHOR_GAMMA_R, samples, conj.value(), tol, seed),
        VerificationReport::new("alpha_gamma_product", ANCHOR_GAMMA_R, samples, product.value(), tol, seed),
    ]
}

/// `e(t) = δ(γʳ_t(1)) + rQγʳ_t(1) − rγʳ_t(1)α_t(Q)`.
pub fn e_of_t(ctx: &PerturbedContext, t: f64) -> Mat {
    let g1 = ctx.gamma_r_one_exact(t);
    let q = ctx.q.matrix();
    let aq = ctx
        .base
        .heisenberg_flow(ctx.q.element(), ComplexTime::real(t))
        .into_matrix();
    let r = C64::new(ctx.r, 0.0);
    ctx.base.delta_mat(&g1) + q * &g1 * r - &g1 * aq * r
}

/// The sKMS axioms for `φʳ` against `(αʳ, δ_r)` plus the `e(t)` identity.
pub fn skms_check_perturbed(
    ctx: &PerturbedContext,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Vec<VerificationReport> {
    let g = ctx.grading();
    let mut r = rng(seed);
    let mut herm = MaxResidual::default();
    let mut alpha_inv = MaxResidual::default();
    let mut gamma_inv = MaxResidual::default();
    let mut kms = MaxResidual::default();
    let mut deriv = MaxResidual::default();
    let mut d2 = MaxResidual::default();
    let mut susy = MaxResidual::default();
    let mut e_id = MaxResidual::default();
    let g_i = ctx.gamma_r_i_exact();
    let h_r = &ctx.h_r;
    let h_norm = operator_norm(h_r).max(1.0);
    let e_times = [0.0, 0.3, 1.0];
    let e_mats: Vec<Mat> = e_times.iter().map(|&t| e_of_t(ctx, t)).collect();
    for k in 0..samples {
        let x = unit_element(g, &mut r).into_matrix();
        let y = unit_element(g, &mut r).into_matrix();
        let w = unit_element(g, &mut r).into_matrix();
        let t = match k % 3 {
            0 => 0.0,
            1 => 0.7,
            _ => 4.0 * r.random::<f64>() - 2.0,
        };
        let px = ctx.phi_r_exact(&x);
        herm.push((ctx.phi_r_exact(&x.adjoint()) - px.conj()).norm());
        alpha_inv.push((ctx.phi_r_exact(&ctx.alpha_r_exact(&x, ComplexTime::real(t))) - px).norm());
        gamma_inv.push((ctx.phi_r_exact(&g.conjugate(&x)) - px).norm());

        // φʳ(x αʳ_{t+i}(y)) in the eigenbasis of H_r versus φ(αʳ_t(y) γ(x) γʳ_i(1)).
        let xt = ctx.spectrum_r.to_eigenbasis(&x);
        let yt = ctx.spectrum_r.to_eigenbasis(&y);
        let lhs = ctx.phi_r_eigenbasis(&(xt * ctx.spectrum_r.flow_in_eigenbasis(&yt, C64::new(t, 1.0))));
        let ay = ctx.alpha_r_exact(&y, ComplexTime::real(t));
        let rhs = ctx.base.phi_mat(&(ay * g.conjugate(&x) * &g_i));
        kms.push((lhs - rhs).norm());

        deriv.push(ctx.phi_r_exact(&ctx.perturbed_superderivation(&x)).norm());

        let dd = ctx.perturbed_superderivation(&ctx.perturbed_superderivation(&y));
        let ad = h_r * &y - &y * h_r;
        d2.push(operator_norm(&(&dd - &ad)) / (operator_norm(&y) * h_norm));
        susy.push((ctx.phi_r_exact(&(&x * &dd * &w)) - ctx.phi_r_exact(&(&x * &ad * &w))).norm());

        for e in &e_mats {
            e_id.push(ctx.base.phi_mat(&(&w * e)).norm());
        }
    }
    let one = (ctx.phi_r_exact(&Mat::identity(g.dim(), g.dim())) - C64::new(1.0, 0.0)).norm();
    let e0 = max_abs(&e_mats[0]);
    vec![
        VerificationReport::new("phi_r_normalization", ANCHOR_PHI1, 1, one, tol, seed),
        VerificationReport::new("phi_r_hermitian", ANCHOR_PERTURBED_SKMS, samples, herm.value(), tol, seed),
        VerificationReport::new("phi_r_alpha_r_invariant", ANCHOR_PERTURBED_SKMS, samples, alpha_inv.value(), tol, seed),
        VerificationReport::new("phi_r_gamma_invariant", ANCHOR_PERTURBED_SKMS, samples, gamma_inv.value(), tol, seed),
        VerificationReport::new("phi_r_kms_boundary", ANCHOR_PERTURBED_SKMS, samples, kms.value(), tol, seed),
        VerificationReport::new("phi_r_delta_r_zero", ANCHOR_PERTURBED_SKMS, samples, deriv.value(), tol, seed),
        VerificationReport::new("delta_r_squared_is_ad_h_r", ANCHOR_PERTURBED_SKMS, samples, d2.value(), tol, seed),
        VerificationReport::new("phi_r_weak_supersymmetry", ANCHOR_PERTURBED_SKMS, samples, susy.value(), tol, seed),
        VerificationReport::new("e_t_identity", ANCHOR_PERTURBED_SKMS, samples * e_times.len(), e_id.value(), tol, seed)
            .with_detail("t in {0, 0.3, 1.0}"),
        VerificationReport::new("e_zero_exact", ANCHOR_PERTURBED_SKMS, 1, e0, tol, seed)
            .require(e0 == 0.0)
            .with_detail("requires e(0) == 0 bit-exactly"),
    ]
}

/// Random point of the tube `𝒯ⁿ = {z : Im z ∈ Δ_n}`.
fn tube_point(n: usize, r: &mut crate::sample::SeededRng) -> Vec<C64> {
    let mut ims: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
    ims.sort_by(f64::total_cmp);
    ims.into_iter()
        .map(|im| C64::new(2.0 * r.random::<f64>() - 1.0, im))
        .collect()
}

/// The continuation identity `φ(α_{z_1}(x_1)⋯α_{z_n}(x_n)α_i(x_0)) = φ(x_0 α_{z_1}(γx_1)⋯)`
/// and the reflection identity, on exact complex-time flows in the eigenbasis.
pub fn tube_identities_check(
    sys: &GradedSystem,
    max_n: usize,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Vec<VerificationReport> {
    let g = sys.grading();
    let spec = sys.spectrum();
    let mut r = rng(seed);
    let mut cont = MaxResidual::default();
    let mut refl = MaxResidual::default();
    let flow = |x: &Mat, z: C64| spec.flow_in_eigenbasis(&spec.to_eigenbasis(x), z);
    for k in 0..samples {
        let n = 1 + k % max_n.max(1);
        let xs: Vec<Mat> = (0..=n).map(|_| unit_element(g, &mut r).into_matrix()).collect();
        let zs = tube_point(n, &mut r);
        let d = sys.dim();

        let mut lhs = Mat::identity(d, d);
        for j in 1..=n {
            lhs *= flow(&xs[j], zs[j - 1]);
        }
        lhs *= flow(&xs[0], C64::new(0.0, 1.0));
        let mut rhs = spec.to_eigenbasis(&xs[0]);
        for j in 1..=n {
            rhs *= flow(&g.conjugate(&xs[j]), zs[j - 1]);
        }
        cont.push((sys.phi_eigenbasis(&lhs) - sys.phi_eigenbasis(&rhs)).norm());

        let mut left = Mat::identity(d, d);
        for j in (1..=n).rev() {
            left *= flow(&xs[j], zs[j - 1].conj());
        }
        let mut right = Mat::identity(d, d);
        for j in 1..=n {
            right *= flow(&xs[j].adjoint(), zs[j - 1]);
        }
        refl.push((sys.phi_eigenbasis(&left).conj() - sys.phi_eigenbasis(&right)).norm());
    }
    vec![
        VerificationReport::new("continuation_identity", ANCHOR_TUBE, samples, cont.value(), tol, seed),
        VerificationReport::new("reflection_identity", ANCHOR_TUBE, samples, refl.value(), tol, seed),
    ]
}

/// `|Tr(Γe^{-H_r}) − Tr(Γe^{-H})|` over a grid of couplings.
pub fn witten_invariance_check(
    base: &Arc<GradedSystem>,
    q: &OddPerturbation,
    grid: &[f64],
    tol: f64,
    seed: u64,
) -> VerificationReport {
    let mut res = MaxResidual::default();
    for &rr in grid {
        match PerturbedContext::new(base.clone(), q.clone(), rr) {
            Ok(ctx) => res.push((ctx.witten_index_r() - base.witten_index()).abs()),
            Err(e) => {
                return VerificationReport::failed_to_run("witten_index_invariance", ANCHOR_PHI1, tol, seed, &e)
            }
        }
    }
    VerificationReport::new("witten_index_invariance", ANCHOR_PHI1, grid.len(), res.value(), tol, seed)
}

/// Ratio of measured `‖αʳ_t(x) − α^q_t(x)‖` to the Lipschitz bound
/// `2|q−r|(‖δQ‖+‖Q²‖)|t| e^{2(‖δQ‖+‖Q²‖)} ‖x‖`; passes when every ratio is at most 1.
pub fn lipschitz_check(
    base: &Arc<GradedSystem>,
    q: &OddPerturbation,
    draws: usize,
    seed: u64,
) -> VerificationReport {
    let g = base.grading();
    let mut rr = rng(seed);
    let qm = q.matrix();
    let c = operator_norm(&base.delta_mat(qm)) + operator_norm(&(qm * qm));
    let mut ratio = MaxResidual::default();
    for _ in 0..draws {
        let x = unit_element(g, &mut rr).into_matrix();
        let t = 2.0 * rr.random::<f64>() - 1.0;
        let r1 = rr.random::<f64>();
        let r2 = rr.random::<f64>();
        let measure = || -> Result<f64> {
            let a = PerturbedContext::new(base.clone(), q.clone(), r1)?;
            let b = PerturbedContext::new(base.clone(), q.clone(), r2)?;
            Ok(operator_norm(
                &(a.alpha_r_exact(&x, ComplexTime::real(t)) - b.alpha_r_exact(&x, ComplexTime::real(t))),
            ))
        };
        let bound = 2.0 * (r1 - r2).abs() * c * t.abs() * (2.0 * c).exp() * operator_norm(&x);
        match measure() {
            Ok(m) if bound > 0.0 => ratio.push(m / bound),
            Ok(m) => ratio.push(if m == 0.0 { 0.0 } else { f64::INFINITY }),
            Err(e) => return VerificationReport::failed_to_run("lipschitz_bound", ANCHOR_DYSON_BOUNDS, 1.0, seed, &e),
        }
    }
    VerificationReport::new("lipschitz_bound", ANCHOR_DYSON_BOUNDS, draws, ratio.value(), 1.0, seed)
        .with_detail("residual is measured/bound")
}

/// Algebraic facts about `a_r`, `H_r` and `δ_r`.
pub fn context_invariants_check(ctx: &PerturbedContext, samples: usize, seed: u64, tol: f64) -> Vec<VerificationReport> {
    let g = ctx.grading();
    let qm = ctx.q.matrix();
    let q0 = ctx.base.supercharge().matrix();
    let shifted = q0 + qm * C64::new(ctx.r, 0.0);
    let hr_res = max_abs(&(&shifted * &shifted - &ctx.h_r));
    let a_sa = max_abs(&(&ctx.a_r - ctx.a_r.adjoint()));
    let a_even = max_abs(&(&ctx.a_r - g.conjugate(&ctx.a_r)));
    let da = ctx.base.delta_mat(qm) + qm * qm * C64::new(2.0 * ctx.r, 0.0);
    let adot = max_abs(&(da - ctx.perturbed_superderivation(qm)));
    let mut r = rng(seed);
    let mut d2 = MaxResidual::default();
    for _ in 0..samples {
        let x = unit_element(g, &mut r).into_matrix();
        let dd = ctx.perturbed_superderivation(&ctx.perturbed_superderivation(&x));
        d2.push(max_abs(&(dd - (&ctx.h_r * &x - &x * &ctx.h_r))));
    }
    vec![
        VerificationReport::new("h_r_is_square", ANCHOR_DYSON_BOUNDS, 1, hr_res, tol, seed),
        VerificationReport::new("a_r_selfadjoint_even", ANCHOR_DYSON_BOUNDS, 1, a_sa.max(a_even), tol, seed),
        VerificationReport::new("a_r_derivative", ANCHOR_DYSON_BOUNDS, 1, adot, tol, seed),
        VerificationReport::new("delta_r_squared", ANCHOR_DYSON_BOUNDS, samples, d2.value(), tol, seed),
    ]
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::sample::{gaussian_matrix, random_selfadjoint_odd};

    pub(crate) fn fixture(p: usize, q: usize, seed: u64, q_scale: f64, r: f64) -> PerturbedContext {
        let g = Grading::standard(p, q).unwrap();
        let mut rr = rng(seed);
        let m = gaussian_matrix(q, p, &mut rr).map(|v| v / (p.max(q) as f64).sqrt());
        let d = p + q;
        let mut q0 = Mat::zeros(d, d);
        for i in 0..q {
            for j in 0..p {
                q0[(p + i, j)] = m[(i, j)];
                q0[(j, p + i)] = m[(i, j)].conj();
            }
        }
        let base = Arc::new(GradedSystem::new(g.clone(), q0).unwrap());
        let qq = random_selfadjoint_odd(&g, &mut rr).into_matrix().map(|v| v * q_scale);
        PerturbedContext::new(base, OddPerturbation::new(&g, qq).unwrap(), r).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let ctx = fixture(2, 1, 1, 0.5, 0.5);
        assert!(ctx.at(1.5).is_err());
        let g = ctx.grading().clone();
        assert!(matches!(
            OddPerturbation::new(&g, Mat::identity(3, 3)),
            Err(Error::InvalidPerturbation(_))
        ));
    }

    #[test]
    fn perturbed_superderivation_examples() {
        let ctx = fixture(3, 1, 2, 0.6, 0.7);
        let g = ctx.grading();
        let x = unit_element(g, &mut rng(3)).into_matrix();
        let zero = ctx.at(0.0).unwrap();
        assert!(max_abs(&(zero.perturbed_superderivation(&x) - ctx.base.delta_mat(&x))) == 0.0);
        assert_eq!(max_abs(&ctx.perturbed_superderivation(&Mat::identity(4, 4))), 0.0);
        for rep in context_invariants_check(&ctx, 10, 1, 1e-11) {
            assert!(rep.passed, "{} {}", rep.identity_name, rep.max_residual);
        }
    }

    #[test]
    fn witten_index_and_normalization_survive_perturbation() {
        let ctx = fixture(3, 2, 4, 0.8, 1.0);
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        assert!(witten_invariance_check(ctx.base(), ctx.perturbation(), &grid, 1e-10, 0).passed);
        assert!((ctx.phi_r_exact(&Mat::identity(5, 5)) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn exact_oracles_match_dense_exponentials() {
        let ctx = fixture(2, 1, 5, 0.5, 0.6);
        let i = C64::new(0.0, 1.0);
        let t = 0.8;
        let eh = |m: &Mat, c: C64| m.map(|v| v * c).exp();
        let h = ctx.base.hamiltonian().matrix();
        let expect = eh(&ctx.h_r, i * t) * eh(h, -i * t);
        assert!(max_abs(&(ctx.gamma_r_one_exact(t) - expect)) < 1e-12);
        let expect_i = eh(&ctx.h_r, C64::new(-1.0, 0.0)) * eh(h, C64::new(1.0, 0.0));
        assert!(max_abs(&(ctx.gamma_r_i_exact() - expect_i)) < 1e-12);
    }

    #[test]
    fn lemma43_holds_and_is_trivial_at_zero() {
        let ctx = fixture(3, 2, 6, 0.7, 0.8);
        for rep in lemma43_check(&ctx, &[0.3, 1.0], 10, 2, 1e-11) {
            assert!(rep.passed, "{} {}", rep.identity_name, rep.max_residual);
        }
        for rep in lemma43_check(&ctx.at(0.0).unwrap(), &[0.3, 1.0], 5, 2, 1e-13) {
            assert!(rep.passed, "r=0 {} {}", rep.identity_name, rep.max_residual);
        }
    }

    #[test]
    fn perturbed_skms_axioms_hold() {
        let ctx = fixture(3, 1, 7, 0.5, 0.7);
        for rep in skms_check_perturbed(&ctx, 12, 3, 1e-9) {
            assert!(rep.passed, "{} {}", rep.identity_name, rep.max_residual);
        }
    }

    #[test]
    fn tube_identities_hold() {
        let base = fixture(3, 1, 8, 0.5, 0.5);
        for rep in tube_identities_check(base.base(), 3, 12, 4, 1e-10) {
            assert!(rep.passed, "{} {}", rep.identity_name, rep.max_residual);
        }
    }

    #[test]
    fn lipschitz_bound_holds() {
        let ctx = fixture(2, 1, 9, 0.5, 0.5);
        assert!(lipschitz_check(ctx.base(), ctx.perturbation(), 20, 1).passed);
    }

    #[test]
    fn perturbed_functional_paths_agree() {
        let ctx = fixture(3, 1, 10, 0.5, 0.5);
        let x = unit_element(ctx.grading(), &mut rng(1)).into_matrix();
        let v = perturbed_functional(&ctx, &x, 1e-12).unwrap();
        assert!((v.series - v.exact).norm() <= v.error_bound + 1e-12, "{:?}", v);
        let one = perturbed_functional(&ctx, &Mat::identity(4, 4), 1e-12).unwrap();
        assert!((one.exact - 1.0).norm() < 1e-12);
        let zero = ctx.at(0.0).unwrap();
        let z = perturbed_functional(&zero, &x, 1e-12).unwrap();
        assert!((z.series - ctx.base.phi_mat(&x)).norm() < 1e-13);
    }
}
