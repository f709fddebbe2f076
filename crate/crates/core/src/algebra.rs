//! Complex matrix *-algebra with a Z2-grading.
//!
//! Elements are dense `d x d` complex matrices carrying a cached parity
//! classification relative to a fixed grading operator `Γ`. All constructors
//! that produce an [`Element`] go through a [`Grading`], so the cached parity
//! always reflects `ΓxΓ` for the matrix actually stored.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;

/// Relative tolerance used to classify an element as even or odd.
pub const PARITY_TOL: f64 = 1e-10;
/// Absolute tolerance for the grading operator axioms.
pub const GRADING_TOL: f64 = 1e-12;
/// Absolute tolerance of the scalar-slot test used by cochains.
pub const SCALAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::Mixed => "mixed",
        }
    }

    /// `0` for even, `1` for odd, `None` when not homogeneous.
    pub fn degree(self) -> Option<u8> {
        match self {
            Parity::Even => Some(0),
            Parity::Odd => Some(1),
            Parity::Mixed => None,
        }
    }
}

/// A matrix together with its parity relative to the grading that built it.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    mat: Mat,
    parity: Parity,
}

impl Element {
    pub(crate) fn from_parts(mat: Mat, parity: Parity) -> Self {
        Self { mat, parity }
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn into_matrix(self) -> Mat {
        self.mat
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn is_even(&self) -> bool {
        self.parity == Parity::Even
    }

    pub fn is_odd(&self) -> bool {
        self.parity == Parity::Odd
    }

    /// True when `x` is within [`SCALAR_TOL`] of `(tr x / d)·1`.
    pub fn is_scalar(&self) -> bool {
        is_scalar_matrix(&self.mat, SCALAR_TOL)
    }

    pub fn norm(&self) -> f64 {
        operator_norm(&self.mat)
    }
}

/// Selfadjoint unitary `Γ ≠ 1` defining the grading `γ = Ad Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grading {
    gamma: Mat,
    // Diagonal signs when Γ is diagonal; enables O(d^2) conjugation.
    diag: Option<Vec<f64>>,
}

impl Grading {
    pub fn new(gamma: Mat) -> Result<Self> {
        let (r, c) = gamma.shape();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        let d = r;
        let id = Mat::identity(d, d);
        let herm = max_abs(&(&gamma - gamma.adjoint()));
        if herm > GRADING_TOL {
            return Err(Error::InvalidGrading(format!(
                "not selfadjoint (residual {herm:e})"
            )));
        }
        let unit = max_abs(&(&gamma * &gamma - &id));
        if unit > GRADING_TOL {
            return Err(Error::InvalidGrading(format!(
                "Γ² ≠ 1 (residual {unit:e})"
            )));
        }
        if max_abs(&(&gamma - &id)) <= GRADING_TOL {
            return Err(Error::InvalidGrading("Γ equals the identity".into()));
        }
        let is_diag = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .all(|(i, j)| i == j || gamma[(i, j)] == C64::new(0.0, 0.0));
        let diag = is_diag.then(|| (0..d).map(|i| gamma[(i, i)].re).collect());
        Ok(Self { gamma, diag })
    }

    /// `Γ = diag(I_p, -I_q)`.
    pub fn standard(p: usize, q: usize) -> Result<Self> {
        let d = p + q;
        let gamma = Mat::from_fn(d, d, |i, j| {
            if i != j {
                C64::new(0.0, 0.0)
            } else if i < p {
                C64::new(1.0, 0.0)
            } else {
                C64::new(-1.0, 0.0)
            }
        });
        Self::new(gamma)
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.gamma
    }

    fn check_dim(&self, m: &Mat) -> Result<()> {
        let (r, c) = m.shape();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        if r != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: r,
            });
        }
        Ok(())
    }

    /// `ΓxΓ` on a raw matrix.
    pub fn conjugate(&self, x: &Mat) -> Mat {
        match &self.diag {
            Some(s) => Mat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * (s[i] * s[j])),
            // Γ² = 1, so scalars are fixed; skip the product to keep them bit-exact.
            None if is_exact_scalar(x) => x.clone(),
            None => &self.gamma * x * &self.gamma,
        }
    }

    pub fn classify(&self, x: &Mat) -> Parity {
        let norm = x.norm();
        if norm == 0.0 {
            return Parity::Even;
        }
        let gx = self.conjugate(x);
        if (x - &gx).norm() <= PARITY_TOL * norm {
            Parity::Even
        } else if (x + &gx).norm() <= PARITY_TOL * norm {
            Parity::Odd
        } else {
            Parity::Mixed
        }
    }

    pub fn element(&self, mat: Mat) -> Result<Element> {
        self.check_dim(&mat)?;
        let parity = self.classify(&mat);
        Ok(Element { mat, parity })
    }

    pub fn identity(&self) -> Element {
        let d = self.dim();
        Element {
            mat: Mat::identity(d, d),
            parity: Parity::Even,
        }
    }

    pub fn zero(&self) -> Element {
        let d = self.dim();
        Element {
            mat: Mat::zeros(d, d),
            parity: Parity::Even,
        }
    }

    /// The grading operator itself as an (even) element.
    pub fn gamma_element(&self) -> Element {
        Element {
            mat: self.gamma.clone(),
            parity: Parity::Even,
        }
    }

    /// `γ(x) = ΓxΓ`.
    pub fn gamma(&self, x: &Element) -> Element {
        Element {
            mat: self.conjugate(&x.mat),
            parity: x.parity,
        }
    }

    pub fn adjoint(&self, x: &Element) -> Element {
        Element {
            mat: x.mat.adjoint(),
            parity: x.parity,
        }
    }

    pub fn mul(&self, x: &Element, y: &Element) -> Element {
        let mat = &x.mat * &y.mat;
        let parity = match (x.parity.degree(), y.parity.degree()) {
            (Some(a), Some(b)) if (a + b) % 2 == 0 => Parity::Even,
            (Some(_), Some(_)) => Parity::Odd,
            _ => self.classify(&mat),
        };
        Element { mat, parity }
    }

    /// Ordered product `x_0 x_1 ⋯ x_k`; the identity for an empty slice.
    pub fn product(&self, xs: &[&Element]) -> Element {
        xs.iter()
            .fold(self.identity(), |acc, x| self.mul(&acc, x))
    }

    pub fn add(&self, x: &Element, y: &Element) -> Element {
        self.combine(C64::new(1.0, 0.0), x, C64::new(1.0, 0.0), y)
    }

    pub fn sub(&self, x: &Element, y: &Element) -> Element {
        self.combine(C64::new(1.0, 0.0), x, C64::new(-1.0, 0.0), y)
    }

    /// `a·x + b·y`.
    pub fn combine(&self, a: C64, x: &Element, b: C64, y: &Element) -> Element {
        let mat = x.mat.map(|v| v * a) + y.mat.map(|v| v * b);
        let parity = if x.parity == y.parity && x.parity != Parity::Mixed {
            x.parity
        } else {
            self.classify(&mat)
        };
        Element { mat, parity }
    }

    pub fn scale(&self, a: C64, x: &Element) -> Element {
        Element {
            mat: x.mat.map(|v| v * a),
            parity: x.parity,
        }
    }

    pub fn from_matrix_unchecked_parity(&self, mat: Mat) -> Element {
        let parity = self.classify(&mat);
        Element { mat, parity }
    }

    pub fn parity_split(&self, x: &Element) -> Result<(Element, Element)> {
        self.check_dim(&x.mat)?;
        let gx = self.conjugate(&x.mat);
        let half = C64::new(0.5, 0.0);
        let even = (&x.mat + &gx).map(|v| v * half);
        let odd = (&x.mat - &gx).map(|v| v * half);
        Ok((
            Element {
                mat: even,
                parity: Parity::Even,
            },
            Element {
                parity: if odd.norm() == 0.0 {
                    Parity::Even
                } else {
                    Parity::Odd
                },
                mat: odd,
            },
        ))
    }

    /// Graded commutator, evaluated with the five-term formula
    /// `xy + ¼(y−γy)(x−γx) − ¼(y+γy)(x−γx) − ¼(y−γy)(x+γx) − ¼(y+γy)(x+γx)`.
    pub fn graded_commutator(&self, x: &Element, y: &Element) -> Result<Element> {
        self.check_dim(&x.mat)?;
        self.check_dim(&y.mat)?;
        let gx = self.conjugate(&x.mat);
        let gy = self.conjugate(&y.mat);
        let xm = &x.mat - &gx;
        let xp = &x.mat + &gx;
        let ym = &y.mat - &gy;
        let yp = &y.mat + &gy;
        let quarter = C64::new(0.25, 0.0);
        let sum = &x.mat * &y.mat
            + (&ym * &xm - &yp * &xm - &ym * &xp - &yp * &xp).map(|v| v * quarter);
        Ok(self.from_matrix_unchecked_parity(sum))
    }

    /// `Str(x) = Tr(Γx)`.
    pub fn supertrace(&self, x: &Element) -> Result<C64> {
        self.check_dim(&x.mat)?;
        Ok(self.supertrace_raw(&x.mat))
    }

    pub(crate) fn supertrace_raw(&self, x: &Mat) -> C64 {
        match &self.diag {
            Some(s) => (0..x.nrows()).map(|i| x[(i, i)] * s[i]).sum(),
            None => (&self.gamma * x).trace(),
        }
    }
}

/// Largest singular value.
pub fn operator_norm(x: &Mat) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn max_abs(x: &Mat) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn is_exact_scalar(x: &Mat) -> bool {
    let zero = C64::new(0.0, 0.0);
    x.is_square()
        && (0..x.nrows()).all(|i| (0..x.ncols()).all(|j| if i == j { x[(i, j)] == x[(0, 0)] } else { x[(i, j)] == zero }))
}

pub fn is_scalar_matrix(x: &Mat, tol: f64) -> bool {
    let d = x.nrows();
    if d == 0 {
        return true;
    }
    let mean = x.trace() / C64::new(d as f64, 0.0);
    let mut dev = x.clone();
    for i in 0..d {
        dev[(i, i)] -= mean;
    }
    operator_norm(&dev) <= tol
}

/// Serialize a matrix as a row-major array of rows of `[re, im]` pairs.
pub fn matrix_to_json(x: &Mat) -> Value {
    Value::Array(
        (0..x.nrows())
            .map(|i| {
                Value::Array(
                    (0..x.ncols())
                        .map(|j| {
                            let v = x[(i, j)];
                            serde_json::json!([v.re, v.im])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn matrix_from_json(v: &Value) -> Result<Mat> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::MalformedMatrix("expected an array of rows".into()))?;
    let nrows = rows.len();
    let mut entries = Vec::new();
    let mut ncols = None;
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| Error::MalformedMatrix(format!("row {i} is not an array")))?;
        match ncols {
            None => ncols = Some(row.len()),
            Some(n) if n != row.len() => {
                return Err(Error::MalformedMatrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )))
            }
            _ => {}
        }
        for (j, e) in row.iter().enumerate() {
            let pair = e.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                Error::MalformedMatrix(format!("entry ({i},{j}) is not a [re, im] pair"))
            })?;
            let re = pair[0].as_f64();
            let im = pair[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) if re.is_finite() && im.is_finite() => {
                    entries.push(C64::new(re, im))
                }
                _ => {
                    return Err(Error::MalformedMatrix(format!(
                        "entry ({i},{j}) is not a pair of finite numbers"
                    )))
                }
            }
        }
    }
    let ncols = ncols.unwrap_or(0);
    Ok(Mat::from_row_slice(nrows, ncols, &entries))
}

/// serde adapter for `Mat` fields using the `[re, im]` row-major layout.
pub mod matrix_serde {
    use super::*;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Mat, D::Error> {
        let v = Value::deserialize(d)?;
        matrix_from_json(&v).map_err(D::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(
            m: &Option<Mat>,
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            m.as_ref().map(matrix_to_json).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Option<Mat>, D::Error> {
            let v = Option::<Value>::deserialize(d)?;
            v.map(|v| matrix_from_json(&v).map_err(D::Error::custom))
                .transpose()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_element, random_even, random_odd, rng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn grading_rejects_identity_and_non_involutions() {
        assert!(matches!(
            Grading::new(Mat::identity(3, 3)),
            Err(Error::InvalidGrading(_))
        ));
        let mut g = Mat::identity(2, 2);
        g[(1, 1)] = c(2.0, 0.0);
        assert!(Grading::new(g).is_err());
        let mut g = Mat::identity(2, 2);
        g[(0, 1)] = c(0.0, 1.0);
        assert!(Grading::new(g).is_err());
    }

    #[test]
    fn parity_split_of_gamma_is_itself() {
        let g = Grading::standard(2, 3).unwrap();
        let (e, o) = g.parity_split(&g.gamma_element()).unwrap();
        assert_eq!(e.matrix(), g.matrix());
        assert_eq!(max_abs(o.matrix()), 0.0);
    }

    #[test]
    fn parity_split_of_block_diagonal_is_trivial() {
        let g = Grading::standard(2, 2).unwrap();
        let mut r = rng(3);
        let x = random_even(&g, &mut r);
        let (e, o) = g.parity_split(&x).unwrap();
        assert!(max_abs(&(e.matrix() - x.matrix())) < 1e-15);
        assert!(max_abs(o.matrix()) < 1e-15);
    }

    #[test]
    fn parity_split_recombines() {
        let g = Grading::standard(3, 2).unwrap();
        let mut r = rng(7);
        for _ in 0..10 {
            let x = random_element(&g, &mut r);
            let (e, o) = g.parity_split(&x).unwrap();
            assert_eq!(e.parity(), Parity::Even);
            assert_eq!(o.parity(), Parity::Odd);
            assert!(max_abs(&(e.matrix() + o.matrix() - x.matrix())) <= 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = Grading::standard(1, 1).unwrap();
        assert!(matches!(
            g.element(Mat::identity(3, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn graded_commutator_on_homogeneous_pairs() {
        let g = Grading::standard(2, 2).unwrap();
        let mut r = rng(11);
        for _ in 0..5 {
            let (a, b) = (random_even(&g, &mut r), random_even(&g, &mut r));
            let com = g.graded_commutator(&a, &b).unwrap();
            let expect = a.matrix() * b.matrix() - b.matrix() * a.matrix();
            assert!(max_abs(&(com.matrix() - expect)) < 1e-13);

            let (a, b) = (random_odd(&g, &mut r), random_odd(&g, &mut r));
            let com = g.graded_commutator(&a, &b).unwrap();
            let expect = a.matrix() * b.matrix() + b.matrix() * a.matrix();
            assert!(max_abs(&(com.matrix() - expect)) < 1e-13);

            let (a, b) = (random_even(&g, &mut r), random_odd(&g, &mut r));
            let com = g.graded_commutator(&a, &b).unwrap();
            let expect = a.matrix() * b.matrix() - b.matrix() * a.matrix();
            assert!(max_abs(&(com.matrix() - expect)) < 1e-13);
        }
    }

    #[test]
    fn graded_commutator_with_identity_vanishes() {
        let g = Grading::standard(3, 1).unwrap();
        let y = random_element(&g, &mut rng(1));
        let com = g.graded_commutator(&g.identity(), &y).unwrap();
        assert!(max_abs(com.matrix()) < 1e-14);
    }

    #[test]
    fn supertrace_of_identity_is_index() {
        let g = Grading::standard(4, 1).unwrap();
        assert_eq!(g.supertrace(&g.identity()).unwrap(), c(3.0, 0.0));
    }

    #[test]
    fn supertrace_vanishes_on_odd_and_graded_commutators() {
        let g = Grading::standard(3, 2).unwrap();
        let mut r = rng(5);
        for _ in 0..10 {
            let x = random_odd(&g, &mut r);
            assert!(g.supertrace(&x).unwrap().norm() < 1e-14);
            let (a, b) = (random_odd(&g, &mut r), random_odd(&g, &mut r));
            let ab = g.supertrace(&g.mul(&a, &b)).unwrap();
            let ba = g.supertrace(&g.mul(&b, &a)).unwrap();
            assert!((ab + ba).norm() < 1e-12, "odd pairs anticommute under Str");
            let com = g.graded_commutator(&a, &b).unwrap();
            assert!(g.supertrace(&com).unwrap().norm() < 1e-10);
            let (a, b) = (random_even(&g, &mut r), random_odd(&g, &mut r));
            let com = g.graded_commutator(&a, &b).unwrap();
            assert!(g.supertrace(&com).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&Mat::identity(4, 4)) - 1.0).abs() < 1e-15);
        let m = Mat::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -4.0)]);
        assert!((operator_norm(&m) - 4.0).abs() < 1e-14);
        let g = Grading::standard(3, 3).unwrap();
        let x = random_element(&g, &mut rng(2));
        let n = x.norm();
        let xx = x.matrix().adjoint() * x.matrix();
        assert!((operator_norm(&xx) - n * n).abs() <= 1e-12 * n * n);
    }

    #[test]
    fn gamma_is_a_star_automorphism() {
        let g = Grading::new({
            // non-diagonal grading: conjugate diag(1,1,-1) by a rotation
            let u = crate::sample::random_unitary(3, &mut rng(9));
            let s = Grading::standard(2, 1).unwrap();
            &u * s.matrix() * u.adjoint()
        })
        .unwrap();
        let mut r = rng(10);
        for _ in 0..5 {
            let x = random_element(&g, &mut r);
            let y = random_element(&g, &mut r);
            let lhs = g.gamma(&g.mul(&x, &y));
            let rhs = g.mul(&g.gamma(&x), &g.gamma(&y));
            assert!(max_abs(&(lhs.matrix() - rhs.matrix())) < 1e-12);
            let a = g.gamma(&g.adjoint(&x));
            let b = g.adjoint(&g.gamma(&x));
            assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-12);
            let gg = g.gamma(&g.gamma(&x));
            assert!(max_abs(&(gg.matrix() - x.matrix())) < 1e-12);
        }
    }

    #[test]
    fn scalar_test() {
        let g = Grading::standard(2, 1).unwrap();
        assert!(g.scale(c(2.0, -1.0), &g.identity()).is_scalar());
        assert!(!g.gamma_element().is_scalar());
    }

    #[test]
    fn matrix_json_rejects_ragged_rows() {
        let v = serde_json::json!([[[1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]]);
        assert!(matches!(matrix_from_json(&v), Err(Error::MalformedMatrix(_))));
        let v = serde_json::json!([[[1.0, 0.0, 3.0]]]);
        assert!(matrix_from_json(&v).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn matrix_json_round_trip(seed in any::<u64>(), d in 1usize..6) {
                let g = Grading::standard(d, 1).unwrap();
                let x = random_element(&g, &mut rng(seed));
                let back = matrix_from_json(&matrix_to_json(x.matrix())).unwrap();
                prop_assert_eq!(&back, x.matrix());
            }

            #[test]
            fn graded_commutator_is_bilinear(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
                let g = Grading::standard(2, 2).unwrap();
                let mut r = rng(seed);
                let (x1, x2, y) = (random_element(&g, &mut r), random_element(&g, &mut r), random_element(&g, &mut r));
                let lin = g.combine(C64::new(a, 0.0), &x1, C64::new(0.0, b), &x2);
                let lhs = g.graded_commutator(&lin, &y).unwrap();
                let rhs = g.combine(
                    C64::new(a, 0.0), &g.graded_commutator(&x1, &y).unwrap(),
                    C64::new(0.0, b), &g.graded_commutator(&x2, &y).unwrap());
                prop_assert!(max_abs(&(lhs.matrix() - rhs.matrix())) < 1e-11);
            }
        }
    }
}
