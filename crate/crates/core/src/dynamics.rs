//! The graded dynamical system generated by an odd supercharge and its
//! super-Gibbs functional.

use crate::algebra::{max_abs, operator_norm, Element, Grading, Mat, Parity, C64};
use crate::error::{Error, Result};
use crate::kernels::Spectrum;
use crate::report::{MaxResidual, VerificationReport};
use crate::sample::{random_element, rng, SeededRng};
use rand::Rng;

/// Default lower bound on `|Tr(Γe^{-H})|`.
pub const EPS_WITTEN: f64 = 1e-8;
/// Tolerance for the oddness and selfadjointness of supercharges.
pub const SUPERCHARGE_TOL: f64 = 1e-12;
/// `spread(H)·|Im z|` above which complex-time flows are ill-conditioned.
pub const CONDITIONING_LIMIT: f64 = 50.0;

/// A point `z` of the complex time plane; evaluations of the functional
/// require `0 ≤ Im z ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexTime(pub C64);

impl ComplexTime {
    pub fn new(re: f64, im: f64) -> Self {
        Self(C64::new(re, im))
    }

    pub fn real(t: f64) -> Self {
        Self(C64::new(t, 0.0))
    }

    pub fn imaginary(s: f64) -> Self {
        Self(C64::new(0.0, s))
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    pub fn in_strip(self) -> bool {
        (0.0..=1.0).contains(&self.0.im)
    }

    fn check_strip(self) -> Result<()> {
        if self.in_strip() {
            Ok(())
        } else {
            Err(Error::StripViolation { im: self.0.im })
        }
    }
}

/// `(Γ, Q₀)` together with `H = Q₀²`, its cached spectrum and `Z = Tr(Γe^{-H})`.
#[derive(Debug, Clone)]
pub struct GradedSystem {
    grading: Grading,
    supercharge: Element,
    hamiltonian: Element,
    spectrum: Spectrum,
    gamma_eig: Mat,
    z: f64,
}

impl GradedSystem {
    pub fn new(grading: Grading, supercharge: Mat) -> Result<Self> {
        Self::with_threshold(grading, supercharge, EPS_WITTEN)
    }

    pub fn with_threshold(grading: Grading, supercharge: Mat, eps_witten: f64) -> Result<Self> {
        let q0 = check_odd_selfadjoint(&grading, supercharge)
            .map_err(Error::InvalidSupercharge)?;
        let h = q0.matrix() * q0.matrix();
        let spectrum = Spectrum::of_hermitian(&h)?;
        if spectrum.min_value() < -1e-12 * (1.0 + spectrum.max_value()) {
            return Err(Error::InvalidSupercharge(format!(
                "H has negative eigenvalue {}",
                spectrum.min_value()
            )));
        }
        let gamma_eig = spectrum.to_eigenbasis(grading.matrix());
        let z: C64 = (0..spectrum.dim())
            .map(|i| gamma_eig[(i, i)] * (-spectrum.values()[i]).exp())
            .sum();
        if z.re.abs() < eps_witten {
            return Err(Error::ZeroWittenIndex {
                z: z.re.abs(),
                threshold: eps_witten,
            });
        }
        let hamiltonian = grading.from_matrix_unchecked_parity(h);
        Ok(Self {
            grading,
            supercharge: q0,
            hamiltonian,
            spectrum,
            gamma_eig,
            z: z.re,
        })
    }

    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    pub fn supercharge(&self) -> &Element {
        &self.supercharge
    }

    pub fn hamiltonian(&self) -> &Element {
        &self.hamiltonian
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// `Z = Tr(Γe^{-H})`.
    pub fn witten_index(&self) -> f64 {
        self.z
    }

    pub fn dim(&self) -> usize {
        self.grading.dim()
    }

    /// `e^{izH} x e^{-izH}`.
    pub fn heisenberg_flow(&self, x: &Element, z: ComplexTime) -> Element {
        if z.0 == C64::new(0.0, 0.0) {
            return x.clone();
        }
        self.warn_conditioning(z);
        let xt = self.spectrum.to_eigenbasis(x.matrix());
        let moved = self.spectrum.from_eigenbasis(&self.spectrum.flow_in_eigenbasis(&xt, z.0));
        // H is even, so the flow preserves parity.
        Element::from_parts(moved, x.parity())
    }

    fn warn_conditioning(&self, z: ComplexTime) {
        let c = self.spectrum.spread() * z.im().abs();
        if c > CONDITIONING_LIMIT {
            log::warn!("complex-time flow at Im z = {} has conditioning exponent {c:.1}", z.im());
        }
    }

    /// `δ(x) = Q₀x − γ(x)Q₀`.
    pub fn superderivation(&self, x: &Element) -> Element {
        let q = self.supercharge.matrix();
        let mat = q * x.matrix() - self.grading.conjugate(x.matrix()) * q;
        let parity = match x.parity() {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::Mixed => Parity::Mixed,
        };
        if parity == Parity::Mixed || mat.norm() == 0.0 {
            self.grading.from_matrix_unchecked_parity(mat)
        } else {
            Element::from_parts(mat, parity)
        }
    }

    /// `δ` on a raw matrix.
    pub fn delta_mat(&self, x: &Mat) -> Mat {
        let q = self.supercharge.matrix();
        q * x - self.grading.conjugate(x) * q
    }

    /// `φ(x) = Tr(Γe^{-H}x)/Z`.
    pub fn skms_eval(&self, x: &Element) -> C64 {
        self.phi_mat(x.matrix())
    }

    pub fn phi_mat(&self, x: &Mat) -> C64 {
        self.phi_eigenbasis(&self.spectrum.to_eigenbasis(x))
    }

    /// `φ` of an element given in the eigenbasis of `H`.
    pub fn phi_eigenbasis(&self, xt: &Mat) -> C64 {
        let d = self.dim();
        let lam = self.spectrum.values();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            let w = (-lam[i]).exp();
            for j in 0..d {
                acc += self.gamma_eig[(j, i)] * w * xt[(i, j)];
            }
        }
        acc / self.z
    }

    /// `F_{x,y}(z) = φ(x α_z(y))` for `z` in the closed strip.
    pub fn kms_two_point(&self, x: &Element, y: &Element, z: ComplexTime) -> Result<C64> {
        z.check_strip()?;
        self.warn_conditioning(z);
        let xt = self.spectrum.to_eigenbasis(x.matrix());
        let yt = self.spectrum.to_eigenbasis(y.matrix());
        let prod = xt * self.spectrum.flow_in_eigenbasis(&yt, z.0);
        Ok(self.phi_eigenbasis(&prod))
    }

    /// Checks the super-KMS axioms on `samples` seeded random elements.
    pub fn verify_skms_axioms(&self, samples: usize, seed: u64, tol: f64) -> Vec<VerificationReport> {
        verify_skms_axioms(self, samples, seed, tol)
    }
}

pub(crate) fn check_odd_selfadjoint(
    g: &Grading,
    m: Mat,
) -> std::result::Result<Element, String> {
    if m.nrows() != g.dim() || m.ncols() != g.dim() {
        return Err(format!(
            "expected a {0}x{0} matrix, found {1}x{2}",
            g.dim(),
            m.nrows(),
            m.ncols()
        ));
    }
    let scale = max_abs(&m).max(1.0);
    let sa = max_abs(&(&m - m.adjoint()));
    if sa > SUPERCHARGE_TOL * scale {
        return Err(format!("not selfadjoint (residual {sa:e})"));
    }
    let odd = max_abs(&(&m + g.conjugate(&m)));
    if odd > SUPERCHARGE_TOL * scale {
        return Err(format!("not odd (residual {odd:e})"));
    }
    let parity = if m.norm() == 0.0 {
        Parity::Even
    } else {
        Parity::Odd
    };
    Ok(Element::from_parts(m, parity))
}

/// Random element of unit operator norm.
pub(crate) fn unit_element(g: &Grading, r: &mut SeededRng) -> Element {
    let x = random_element(g, r);
    let n = x.norm();
    g.scale(C64::new(1.0 / n, 0.0), &x)
}

const ANCHOR_HERMITIAN: &str = "hermitian functional";
const ANCHOR_KMS: &str = "sKMS boundary condition";
const ANCHOR_NORMALIZATION: &str = "normalization";
const ANCHOR_DERIVATION: &str = "derivation invariance";
const ANCHOR_SUSY: &str = "weak supersymmetry";
const ANCHOR_INV: &str = "translation and grading invariance of phi";

/// Residuals for hermitianity, normalization, invariance, the KMS boundary
/// identity, `φ∘δ = 0` and weak supersymmetry. Failures are reported, never
/// raised.
pub fn verify_skms_axioms(
    sys: &GradedSystem,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Vec<VerificationReport> {
    let g = sys.grading();
    let mut r = rng(seed);
    let mut herm = MaxResidual::default();
    let mut alpha_inv = MaxResidual::default();
    let mut gamma_inv = MaxResidual::default();
    let mut kms = MaxResidual::default();
    let mut deriv = MaxResidual::default();
    let mut d2 = MaxResidual::default();
    let mut susy = MaxResidual::default();
    let mut isometry = MaxResidual::default();
    let h = sys.hamiltonian().matrix();
    let h_norm = operator_norm(h).max(1.0);
    for k in 0..samples {
        let x = unit_element(g, &mut r);
        let y = unit_element(g, &mut r);
        let w = unit_element(g, &mut r);
        let t: f64 = match k % 3 {
            0 => 0.0,
            1 => 0.7,
            _ => 4.0 * r.random::<f64>() - 2.0,
        };
        let phi_x = sys.skms_eval(&x);
        herm.push((sys.skms_eval(&g.adjoint(&x)) - phi_x.conj()).norm());

        let ax = sys.heisenberg_flow(&x, ComplexTime::real(t));
        alpha_inv.push((sys.skms_eval(&ax) - phi_x).norm());
        isometry.push((ax.norm() - x.norm()).abs());
        gamma_inv.push((sys.skms_eval(&g.gamma(&x)) - phi_x).norm());

        let lhs = sys
            .kms_two_point(&x, &y, ComplexTime::new(t, 1.0))
            .expect("boundary point lies in the strip");
        let ay = sys.heisenberg_flow(&y, ComplexTime::real(t));
        let rhs = sys.phi_mat(&(ay.matrix() * g.conjugate(x.matrix())));
        kms.push((lhs - rhs).norm());

        deriv.push(sys.skms_eval(&sys.superderivation(&x)).norm());

        let dd = sys.delta_mat(&sys.delta_mat(y.matrix()));
        let ad = h * y.matrix() - y.matrix() * h;
        d2.push(operator_norm(&(&dd - &ad)) / (y.norm() * h_norm));
        let l = sys.phi_mat(&(x.matrix() * &dd * w.matrix()));
        let rr = sys.phi_mat(&(x.matrix() * &ad * w.matrix()));
        susy.push((l - rr).norm());
    }
    let one = (sys.skms_eval(&g.identity()) - C64::new(1.0, 0.0)).norm();
    vec![
        VerificationReport::new("phi_normalization", ANCHOR_NORMALIZATION, 1, one, tol, seed),
        VerificationReport::new("phi_hermitian", ANCHOR_HERMITIAN, samples, herm.value(), tol, seed),
        VerificationReport::new("phi_alpha_invariant", ANCHOR_INV, samples, alpha_inv.value(), tol, seed),
        VerificationReport::new("phi_gamma_invariant", ANCHOR_INV, samples, gamma_inv.value(), tol, seed),
        VerificationReport::new("alpha_isometric", ANCHOR_INV, samples, isometry.value(), tol, seed),
        VerificationReport::new("kms_boundary", ANCHOR_KMS, samples, kms.value(), tol, seed),
        VerificationReport::new("phi_delta_zero", ANCHOR_DERIVATION, samples, deriv.value(), tol, seed),
        VerificationReport::new("delta_squared_is_ad_h", ANCHOR_SUSY, samples, d2.value(), tol, seed),
        VerificationReport::new("weak_supersymmetry", ANCHOR_SUSY, samples, susy.value(), tol, seed),
    ]
    .into_iter()
    .map(|rep| {
        if rep.identity_name == "phi_normalization" {
            rep.with_detail(format!("Z = {}", sys.witten_index()))
        } else {
            rep
        }
    })
    .collect()
}
