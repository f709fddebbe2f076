//! Cochains on the even subalgebra, the `(b, B)` bicomplex and the JLO
//! cocycle of a graded system.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{is_scalar_matrix, operator_norm, Element, Grading, Mat, Parity, C64, SCALAR_TOL};
use crate::dynamics::GradedSystem;
use crate::error::{Error, Result};
use crate::kernels::{chain_budget, chain_integral, simplex_quadrature, SimplexQuadratureRule};
use crate::report::{MaxResidual, VerificationReport};
use crate::sample::{gaussian, gaussian_matrix, random_element, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CochainParity {
    Even,
    Odd,
}

impl CochainParity {
    pub fn flip(self) -> Self {
        match self {
            CochainParity::Even => CochainParity::Odd,
            CochainParity::Odd => CochainParity::Even,
        }
    }

    pub fn admits(self, n: usize) -> bool {
        match self {
            CochainParity::Even => n.is_multiple_of(2),
            CochainParity::Odd => n % 2 == 1,
        }
    }
}

type Evaluator = dyn Fn(usize, &[Mat]) -> Result<C64> + Send + Sync;

/// A sequence of multilinear maps `ρ_n`, evaluated pointwise.
///
/// The wrapper returns zero at degrees of the wrong parity and whenever a
/// slot `i ≥ 1` holds a multiple of the identity, so the wrapped evaluator
/// only has to be multilinear.
#[derive(Clone)]
pub struct Cochain {
    parity: CochainParity,
    max_degree: usize,
    eval: Arc<Evaluator>,
}

impl std::fmt::Debug for Cochain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cochain")
            .field("parity", &self.parity)
            .field("max_degree", &self.max_degree)
            .finish_non_exhaustive()
    }
}

impl Cochain {
    pub fn new<F>(parity: CochainParity, max_degree: usize, f: F) -> Self
    where
        F: Fn(usize, &[Mat]) -> Result<C64> + Send + Sync + 'static,
    {
        Self {
            parity,
            max_degree,
            eval: Arc::new(f),
        }
    }

    pub fn zero(parity: CochainParity, max_degree: usize) -> Self {
        Self::new(parity, max_degree, |_, _| Ok(C64::new(0.0, 0.0)))
    }

    pub fn parity(&self) -> CochainParity {
        self.parity
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// `ρ_n(x_0, …, x_n)`.
    pub fn eval(&self, n: usize, xs: &[Mat]) -> Result<C64> {
        if xs.len() != n + 1 {
            return Err(Error::Arity {
                degree: n,
                expected: n + 1,
                found: xs.len(),
            });
        }
        if n > self.max_degree {
            return Err(Error::InvalidDegree {
                degree: n,
                reason: "above the cochain's maximal degree",
            });
        }
        if !self.parity.admits(n) {
            return Ok(C64::new(0.0, 0.0));
        }
        if xs.iter().skip(1).any(|x| is_scalar_matrix(x, SCALAR_TOL)) {
            return Ok(C64::new(0.0, 0.0));
        }
        (self.eval)(n, xs)
    }
}

/// `(bρ)_n = Σ_{j<n} (-1)^j ρ_{n-1}(…, x_j x_{j+1}, …) + (-1)^n ρ_{n-1}(x_n x_0, x_1, …, x_{n-1})`.
pub fn hochschild_b(rho: &Cochain, n: usize, xs: &[Mat]) -> Result<C64> {
    if n == 0 {
        return Err(Error::InvalidDegree {
            degree: 0,
            reason: "the Hochschild boundary needs n >= 1",
        });
    }
    check_arity(n, xs)?;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        let mut ys: Vec<Mat> = Vec::with_capacity(n);
        ys.extend_from_slice(&xs[..j]);
        ys.push(&xs[j] * &xs[j + 1]);
        ys.extend_from_slice(&xs[j + 2..]);
        acc += sign(j) * rho.eval(n - 1, &ys)?;
    }
    let mut ys: Vec<Mat> = Vec::with_capacity(n);
    ys.push(&xs[n] * &xs[0]);
    ys.extend_from_slice(&xs[1..n]);
    acc += sign(n) * rho.eval(n - 1, &ys)?;
    Ok(acc)
}

/// `(Bρ)_n = Σ_{j=0}^{n} (-1)^{nj} ρ_{n+1}(1, x_j, …, x_n, x_0, …, x_{j-1})`.
pub fn connes_b(rho: &Cochain, n: usize, xs: &[Mat]) -> Result<C64> {
    check_arity(n, xs)?;
    let d = xs[0].nrows();
    let one = Mat::identity(d, d);
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..=n {
        let mut ys: Vec<Mat> = Vec::with_capacity(n + 2);
        ys.push(one.clone());
        ys.extend_from_slice(&xs[j..]);
        ys.extend_from_slice(&xs[..j]);
        acc += sign(n * j) * rho.eval(n + 1, &ys)?;
    }
    Ok(acc)
}

/// `∂ρ = Bρ + bρ`, of opposite parity. `(bρ)_0` is taken as zero.
pub fn boundary(rho: &Cochain) -> Cochain {
    let inner = rho.clone();
    let max = rho.max_degree.saturating_sub(1);
    Cochain::new(rho.parity.flip(), max, move |n, xs| {
        let big_b = connes_b(&inner, n, xs)?;
        let small_b = if n == 0 {
            C64::new(0.0, 0.0)
        } else {
            hochschild_b(&inner, n, xs)?
        };
        Ok(big_b + small_b)
    })
}

fn check_arity(n: usize, xs: &[Mat]) -> Result<()> {
    if xs.len() != n + 1 {
        return Err(Error::Arity {
            degree: n,
            expected: n + 1,
            found: xs.len(),
        });
    }
    Ok(())
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn require_even(g: &Grading, xs: &[Mat]) -> Result<()> {
    for (slot, x) in xs.iter().enumerate() {
        let p = g.classify(x);
        if p != Parity::Even {
            return Err(Error::ParityViolation {
                slot,
                expected: Parity::Even.name(),
                found: p.name(),
            });
        }
    }
    Ok(())
}

/// `τ_n(x_0, …, x_n) = ∫_{Δ_n} φ(x_0 α_{is_1}(δx_1) ⋯ α_{is_n}(δx_n)) dⁿs` on raw
/// matrices, without the parity and degeneracy guards.
pub(crate) fn tau_unchecked(sys: &GradedSystem, xs: &[Mat], budget: u128) -> Result<C64> {
    if xs.len() == 1 {
        return Ok(sys.phi_mat(&xs[0]));
    }
    let deltas: Vec<Mat> = xs[1..].iter().map(|x| sys.delta_mat(x)).collect();
    let mut refs: Vec<&Mat> = Vec::with_capacity(xs.len());
    refs.push(&xs[0]);
    refs.extend(deltas.iter());
    let v = chain_integral(sys.spectrum(), &refs, sys.grading(), budget)?;
    Ok(v / sys.witten_index())
}

/// The JLO cochain component `τ_n` on even arguments.
pub fn tau_eval(sys: &GradedSystem, n: usize, xs: &[Element]) -> Result<C64> {
    if xs.len() != n + 1 {
        return Err(Error::Arity {
            degree: n,
            expected: n + 1,
            found: xs.len(),
        });
    }
    if n % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    for (slot, x) in xs.iter().enumerate() {
        if x.dim() != sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys.dim(),
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
    if xs.iter().skip(1).any(|x| x.is_scalar()) {
        return Ok(C64::new(0.0, 0.0));
    }
    let mats: Vec<Mat> = xs.iter().map(|x| x.matrix().clone()).collect();
    tau_unchecked(sys, &mats, chain_budget())
}

/// `τ` as a [`Cochain`] on the even subalgebra.
pub fn jlo_cocycle(sys: Arc<GradedSystem>, max_degree: usize) -> Cochain {
    jlo_cocycle_with_budget(sys, max_degree, chain_budget())
}

pub fn jlo_cocycle_with_budget(sys: Arc<GradedSystem>, max_degree: usize, budget: u128) -> Cochain {
    Cochain::new(CochainParity::Even, max_degree, move |_, xs| {
        require_even(sys.grading(), xs)?;
        tau_unchecked(&sys, xs, budget)
    })
}

/// `ρ_n(x) = Tr(C_n x_0 [A_{n,1}, x_1] ⋯ [A_{n,n}, x_n])` with Gaussian `C_n`, `A_{n,k}`.
///
/// Commutators kill scalars, so these cochains are normalized and satisfy
/// `b² = B² = bB + Bb = 0` exactly.
pub fn random_cochain(dim: usize, parity: CochainParity, max_degree: usize, seed: u64) -> Cochain {
    let mut r = rng(seed);
    let coeffs: Vec<(Mat, Vec<Mat>)> = (0..=max_degree)
        .map(|n| {
            let c = gaussian_matrix(dim, dim, &mut r);
            let a = (0..n).map(|_| gaussian_matrix(dim, dim, &mut r)).collect();
            (c, a)
        })
        .collect();
    Cochain::new(parity, max_degree, move |n, xs| {
        let (c, a) = &coeffs[n];
        let mut prod = c * &xs[0];
        for k in 1..=n {
            let comm = &a[k - 1] * &xs[k] - &xs[k] * &a[k - 1];
            prod *= comm;
        }
        Ok(prod.trace())
    })
}

/// A sampled lower bound for `‖τ_n‖` over tuples of unit graph norm.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormEstimate {
    pub degree: usize,
    pub sampled_norm: f64,
    pub samples: usize,
    pub seed: u64,
    /// `n^{1/2} · sampled_norm^{1/n}`.
    pub root_sequence: f64,
}

/// Samples `|τ_n|` on tuples drawn from the span of `generators`, each
/// normalized to `‖x‖ + ‖δx‖ = 1`, for `n = 2, 4, …, max_degree`.
///
/// Every degree draws from its own seeded stream, so extending `samples`
/// keeps earlier draws and the bound can only grow.
pub fn entireness_diagnostic(
    sys: &GradedSystem,
    generators: &[Element],
    max_degree: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<NormEstimate>> {
    if generators.is_empty() {
        return Err(Error::InvalidDegree {
            degree: max_degree,
            reason: "entireness diagnostic needs at least one generator",
        });
    }
    require_even(
        sys.grading(),
        &generators.iter().map(|g| g.matrix().clone()).collect::<Vec<_>>(),
    )?;
    let budget = chain_budget();
    let mut out = Vec::new();
    for n in (2..=max_degree).step_by(2) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(n as u64);
        let mut best = 0.0f64;
        for _ in 0..samples {
            let xs: Vec<Mat> = (0..=n)
                .map(|_| {
                    let mut x = Mat::zeros(sys.dim(), sys.dim());
                    for g in generators {
                        x += g.matrix() * gaussian(&mut r);
                    }
                    let graph = operator_norm(&x) + operator_norm(&sys.delta_mat(&x));
                    if graph > 0.0 {
                        x / C64::new(graph, 0.0)
                    } else {
                        x
                    }
                })
                .collect();
            let v = if xs.iter().skip(1).any(|x| is_scalar_matrix(x, SCALAR_TOL)) {
                0.0
            } else {
                tau_unchecked(sys, &xs, budget)?.norm()
            };
            best = best.max(v);
        }
        out.push(NormEstimate {
            degree: n,
            sampled_norm: best,
            samples,
            seed,
            root_sequence: (n as f64).sqrt() * best.powf(1.0 / n as f64),
        });
    }
    Ok(out)
}

/// `∫_{Δ_n} φ(x_0 α_{is_1}(x_1) ⋯ α_{is_n}(x_n)) dⁿs` for arbitrary elements.
pub fn ordered_integral(sys: &GradedSystem, xs: &[Mat], budget: u128) -> Result<C64> {
    let refs: Vec<&Mat> = xs.iter().collect();
    Ok(chain_integral(sys.spectrum(), &refs, sys.grading(), budget)? / sys.witten_index())
}

/// Quadrature of `∂/∂s_j φ(x_0 α_{is_1}(x_1) ⋯ α_{is_m}(x_m))` over `Δ_m`.
///
/// Differentiating in `s_j` replaces `x_j` by `-[H, x_j]` inside the integrand;
/// the integrand is evaluated in the eigenbasis of `H`.
fn derivative_quadrature(
    sys: &GradedSystem,
    xs: &[Mat],
    j: usize,
    rule: &SimplexQuadratureRule,
) -> Result<(C64, f64)> {
    let spec = sys.spectrum();
    let lam = spec.values().to_vec();
    let d = sys.dim();
    let m = xs.len() - 1;
    let mut ys: Vec<Mat> = xs.iter().map(|x| spec.to_eigenbasis(x)).collect();
    ys[j] = Mat::from_fn(d, d, |a, b| -(lam[a] - lam[b]) * ys[j][(a, b)]);
    let gamma = spec.to_eigenbasis(sys.grading().matrix());
    let head = &gamma * &ys[0];
    let integrand = |s: &[f64]| {
        let mut prod = head.clone();
        let mut prev = 0.0;
        for k in 1..=m {
            let w = s[k - 1] - prev;
            for col in 0..d {
                let f = (-w * lam[col]).exp();
                prod.column_mut(col).iter_mut().for_each(|v| *v *= f);
            }
            prod *= &ys[k];
            prev = s[k - 1];
        }
        (0..d)
            .map(|i| prod[(i, i)] * (-(1.0 - prev) * lam[i]).exp())
            .sum::<C64>()
    };
    let (v, e) = simplex_quadrature(integrand, m, rule)?;
    let z = sys.witten_index().abs();
    Ok((v / sys.witten_index(), e / z))
}

const ANCHOR_ROTATION: &str = "ordered-integral rotation identity";
const ANCHOR_TELESCOPING: &str = "simplex derivative telescoping";

/// Checks the rotation identity and the `∂/∂s_j` telescoping identities at
/// degree `n ≤ 4` on `samples` random mixed-parity tuples.
pub fn lemma34_check(
    sys: &GradedSystem,
    n: usize,
    samples: usize,
    seed: u64,
    tol: f64,
    rule: &SimplexQuadratureRule,
) -> Vec<VerificationReport> {
    if n == 0 || n > 4 {
        let err = Error::InvalidDegree {
            degree: n,
            reason: "the identity checks run for 1 <= n <= 4",
        };
        return vec![VerificationReport::failed_to_run("lemma34", ANCHOR_ROTATION, tol, seed, &err)];
    }
    let g = sys.grading();
    let budget = chain_budget();
    let mut r = rng(seed);
    let mut rot = MaxResidual::default();
    let mut rot_unit = MaxResidual::default();
    let mut tele = MaxResidual::default();
    let mut tele_first = MaxResidual::default();
    let mut quad_err = 0.0f64;
    let mut failure: Option<Error> = None;
    for _ in 0..samples {
        let xs: Vec<Mat> = (0..=n).map(|_| random_element(g, &mut r).into_matrix()).collect();
        let mut run = || -> Result<()> {
            let lhs = ordered_integral(sys, &xs, budget)?;
            let mut rotated = Vec::with_capacity(n + 1);
            rotated.push(g.conjugate(&xs[n]));
            rotated.extend_from_slice(&xs[..n]);
            rot.push((lhs - ordered_integral(sys, &rotated, budget)?).norm());

            let mut with_one = xs.clone();
            with_one[n] = Mat::identity(sys.dim(), sys.dim());
            let mut rotated_one = Vec::with_capacity(n + 1);
            rotated_one.push(with_one[n].clone());
            rotated_one.extend_from_slice(&with_one[..n]);
            rot_unit.push(
                (ordered_integral(sys, &with_one, budget)?
                    - ordered_integral(sys, &rotated_one, budget)?)
                .norm(),
            );

            // Degree n+1 integrands, telescoped to degree n.
            let mut big = xs.clone();
            big.push(random_element(g, &mut rng(seed ^ 0x5eed)).into_matrix());
            for j in 1..=n {
                let (q, e) = derivative_quadrature(sys, &big, j, rule)?;
                quad_err = quad_err.max(e);
                let mut plus = Vec::with_capacity(n + 1);
                plus.extend_from_slice(&big[..j]);
                plus.push(&big[j] * &big[j + 1]);
                plus.extend_from_slice(&big[j + 2..]);
                let mut minus = Vec::with_capacity(n + 1);
                minus.extend_from_slice(&big[..j - 1]);
                minus.push(&big[j - 1] * &big[j]);
                minus.extend_from_slice(&big[j + 1..]);
                let rhs = ordered_integral(sys, &plus, budget)? - ordered_integral(sys, &minus, budget)?;
                let res = (q - rhs).norm();
                if j == 1 {
                    tele_first.push(res);
                } else {
                    tele.push(res);
                }
            }
            Ok(())
        };
        if let Err(e) = run() {
            failure = Some(e);
            break;
        }
    }
    if let Some(e) = failure {
        return vec![VerificationReport::failed_to_run("lemma34", ANCHOR_ROTATION, tol, seed, &e)];
    }
    let quad_note = format!("n = {n}, quadrature error estimate {quad_err:e}");
    let mut out = vec![
        VerificationReport::new("lemma34_rotation", ANCHOR_ROTATION, samples, rot.value(), tol, seed),
        VerificationReport::new("lemma34_rotation_unit", ANCHOR_ROTATION, samples, rot_unit.value(), tol, seed),
        VerificationReport::new("lemma34_telescoping_first", ANCHOR_TELESCOPING, samples, tele_first.value(), tol, seed)
            .with_detail(quad_note.clone()),
    ];
    if n >= 2 {
        out.push(
            VerificationReport::new("lemma34_telescoping_inner", ANCHOR_TELESCOPING, samples, tele.value(), tol, seed)
                .with_detail(quad_note),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_even, random_odd, SeededRng};

    fn system(p: usize, q: usize, seed: u64) -> GradedSystem {
        let g = Grading::standard(p, q).unwrap();
        let mut r = rng(seed);
        let m = gaussian_matrix(q, p, &mut r).map(|v| v / (p.max(q) as f64).sqrt());
        let d = p + q;
        let mut q0 = Mat::zeros(d, d);
        for i in 0..q {
            for j in 0..p {
                q0[(p + i, j)] = m[(i, j)];
                q0[(j, p + i)] = m[(i, j)].conj();
            }
        }
        GradedSystem::new(g, q0).unwrap()
    }

    fn evens(g: &Grading, k: usize, r: &mut SeededRng) -> Vec<Mat> {
        (0..k).map(|_| random_even(g, r).into_matrix()).collect()
    }

    #[test]
    fn tau_zero_of_one_is_one() {
        let sys = system(3, 1, 1);
        let one = sys.grading().identity();
        assert!((tau_eval(&sys, 0, &[one]).unwrap() - 1.0).norm() < 1e-13);
    }

    #[test]
    fn tau_odd_degree_and_scalar_slots_vanish() {
        let sys = system(2, 1, 2);
        let g = sys.grading();
        let mut r = rng(3);
        let xs: Vec<Element> = (0..3).map(|_| random_even(g, &mut r)).collect();
        assert_eq!(tau_eval(&sys, 1, &xs[..2]).unwrap(), C64::new(0.0, 0.0));
        for slot in 1..3 {
            let mut ys = xs.clone();
            ys[slot] = g.scale(C64::new(2.5, -1.0), &g.identity());
            assert_eq!(tau_eval(&sys, 2, &ys).unwrap(), C64::new(0.0, 0.0));
        }
        assert_ne!(tau_eval(&sys, 2, &xs).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn tau_rejects_odd_arguments() {
        let sys = system(2, 1, 2);
        let g = sys.grading();
        let mut r = rng(4);
        let xs = vec![random_even(g, &mut r), random_odd(g, &mut r), random_even(g, &mut r)];
        assert!(matches!(
            tau_eval(&sys, 2, &xs),
            Err(Error::ParityViolation { slot: 1, .. })
        ));
    }

    #[test]
    fn tau_matches_monte_carlo() {
        let sys = system(2, 1, 5);
        let g = sys.grading();
        let mut r = rng(6);
        let xs = evens(g, 3, &mut r);
        let exact = tau_unchecked(&sys, &xs, chain_budget()).unwrap();
        let spec = sys.spectrum();
        let d1 = sys.delta_mat(&xs[1]);
        let d2 = sys.delta_mat(&xs[2]);
        let integrand = |s: &[f64]| {
            let heat = |w: f64| spec.apply(|l| C64::new((-w * l).exp(), 0.0));
            let m = sys.grading().matrix() * &xs[0] * heat(s[0]) * &d1 * heat(s[1] - s[0]) * &d2 * heat(1.0 - s[1]);
            m.trace() / sys.witten_index()
        };
        let (v, se) =
            simplex_quadrature(integrand, 2, &SimplexQuadratureRule::monte_carlo(200_000, 9)).unwrap();
        assert!((v - exact).norm() <= 3.0 * se, "{v} vs {exact}, se {se}");
    }

    #[test]
    fn b_on_zero_and_two_term_expansion() {
        let sys = Arc::new(system(2, 1, 7));
        let z = Cochain::zero(CochainParity::Even, 4);
        let mut r = rng(1);
        let xs = evens(sys.grading(), 3, &mut r);
        assert_eq!(hochschild_b(&z, 2, &xs).unwrap(), C64::new(0.0, 0.0));
        let tau = jlo_cocycle(sys.clone(), 4);
        let got = hochschild_b(&tau, 1, &xs[..2]).unwrap();
        let expect = sys.phi_mat(&(&xs[0] * &xs[1])) - sys.phi_mat(&(&xs[1] * &xs[0]));
        assert!((got - expect).norm() < 1e-14);
        assert!(hochschild_b(&tau, 0, &xs[..1]).is_err());
    }

    #[test]
    fn bicomplex_identities_on_random_cochains() {
        let d = 3;
        let mut r = rng(8);
        for parity in [CochainParity::Even, CochainParity::Odd] {
            let rho = random_cochain(d, parity, 6, 99);
            let b_rho = Cochain::new(parity.flip(), 5, {
                let rho = rho.clone();
                move |n, xs| hochschild_b(&rho, n, xs)
            });
            let bb_rho = Cochain::new(parity.flip(), 5, {
                let rho = rho.clone();
                move |n, xs| connes_b(&rho, n, xs)
            });
            for n in 1..=4 {
                let xs: Vec<Mat> = (0..=n + 1).map(|_| gaussian_matrix(d, d, &mut r)).collect();
                let bb = hochschild_b(&b_rho, n + 1, &xs).unwrap();
                assert!(bb.norm() < 1e-10, "b∘b at n={n}: {bb}");
                let ys = &xs[..n];
                let big = connes_b(&bb_rho, n - 1, ys).unwrap();
                assert!(big.norm() < 1e-10, "B∘B at n={n}: {big}");
            }
            let dd = boundary(&boundary(&rho));
            for n in 0..=4 {
                let xs: Vec<Mat> = (0..=n).map(|_| gaussian_matrix(d, d, &mut r)).collect();
                let v = dd.eval(n, &xs).unwrap();
                assert!(v.norm() < 1e-9, "∂∂ at n={n}: {v}");
            }
        }
    }

    #[test]
    fn boundary_of_zero_is_zero() {
        let z = boundary(&Cochain::zero(CochainParity::Even, 5));
        let xs = vec![Mat::identity(2, 2) * C64::new(3.0, 0.0); 4];
        let mut r = rng(2);
        let ys: Vec<Mat> = (0..4).map(|_| gaussian_matrix(2, 2, &mut r)).collect();
        assert_eq!(z.eval(3, &xs).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(z.eval(3, &ys).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(z.parity(), CochainParity::Odd);
    }

    #[test]
    fn jlo_is_a_cocycle() {
        let sys = Arc::new(system(3, 2, 10));
        let tau = jlo_cocycle(sys.clone(), 6);
        let dtau = boundary(&tau);
        let mut r = rng(11);
        for n in [1, 3, 5] {
            let xs = evens(sys.grading(), n + 1, &mut r);
            let v = dtau.eval(n, &xs).unwrap();
            assert!(v.norm() < 1e-9, "n={n}: {v}");
        }
    }

    #[test]
    fn tau_is_multilinear() {
        let sys = system(3, 1, 3);
        let g = sys.grading();
        let mut r = rng(12);
        let xs = evens(g, 3, &mut r);
        let y = random_even(g, &mut r).into_matrix();
        let (a, b) = (C64::new(0.3, -1.1), C64::new(-0.7, 0.4));
        for slot in 0..3 {
            let mut comb = xs.clone();
            comb[slot] = &xs[slot] * a + &y * b;
            let mut only_y = xs.clone();
            only_y[slot] = y.clone();
            let lhs = tau_unchecked(&sys, &comb, chain_budget()).unwrap();
            let rhs = tau_unchecked(&sys, &xs, chain_budget()).unwrap() * a
                + tau_unchecked(&sys, &only_y, chain_budget()).unwrap() * b;
            assert!((lhs - rhs).norm() < 1e-11);
        }
    }

    #[test]
    fn entireness_examples() {
        let sys = system(2, 1, 4);
        let g = sys.grading();
        let est = entireness_diagnostic(&sys, &[g.identity()], 6, 4, 1).unwrap();
        assert!(est.iter().all(|e| e.sampled_norm == 0.0));
        let gens = vec![random_even(g, &mut rng(1)), random_even(g, &mut rng(2))];
        let few = entireness_diagnostic(&sys, &gens, 4, 3, 5).unwrap();
        let more = entireness_diagnostic(&sys, &gens, 4, 6, 5).unwrap();
        for (a, b) in few.iter().zip(&more) {
            assert!(b.sampled_norm >= a.sampled_norm);
        }
        let odd = vec![random_odd(g, &mut rng(3))];
        assert!(entireness_diagnostic(&sys, &odd, 4, 2, 1).is_err());
    }

    #[test]
    fn zero_supercharge_makes_tau_vanish() {
        let g = Grading::standard(2, 1).unwrap();
        let sys = GradedSystem::new(g.clone(), Mat::zeros(3, 3)).unwrap();
        let gens = vec![random_even(&g, &mut rng(1))];
        let est = entireness_diagnostic(&sys, &gens, 4, 3, 2).unwrap();
        assert!(est.iter().all(|e| e.sampled_norm == 0.0));
    }

    #[test]
    fn lemma34_holds() {
        let sys = system(2, 1, 6);
        for n in 1..=3 {
            let reports = lemma34_check(&sys, n, 3, 7, 1e-9, &SimplexQuadratureRule::gauss(10));
            for rep in &reports {
                assert!(rep.passed, "n={n} {}: {}", rep.identity_name, rep.max_residual);
            }
        }
        assert!(!lemma34_check(&sys, 5, 1, 1, 1e-9, &SimplexQuadratureRule::gauss(4))[0].passed);
    }

    #[test]
    fn rotation_holds_with_heat_flow_directly() {
        // Independent check of the n = 1 rotation identity with dense exponentials.
        let sys = system(2, 1, 9);
        let g = sys.grading();
        let mut r = rng(4);
        let x0 = random_element(g, &mut r).into_matrix();
        let x1 = random_element(g, &mut r).into_matrix();
        let heat = |w: f64| sys.hamiltonian().matrix().map(|v| v * -w).exp();
        let f = |a: &Mat, b: &Mat| {
            let (v, _) = simplex_quadrature(
                |s: &[f64]| (g.matrix() * a * heat(s[0]) * b * heat(1.0 - s[0])).trace(),
                1,
                &SimplexQuadratureRule::gauss(16),
            )
            .unwrap();
            v
        };
        let lhs = f(&x0, &x1);
        let rhs = f(&g.conjugate(&x1), &x0);
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
