//! Model specifications and their JSON interchange form.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{matrix_serde, Grading, Mat, C64};
use crate::dynamics::{GradedSystem, EPS_WITTEN};
use crate::error::{Error, Result};
use crate::perturbation::OddPerturbation;
use crate::sample::{gaussian_matrix, random_selfadjoint_odd, random_unitary, rng};

pub const MODEL_SCHEMA: &str = "skms-model/1";

/// Redraws allowed for a random model whose Witten index is too small.
pub const MAX_REDRAWS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    RectangularBlock,
    RandomGraded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none", with = "matrix_serde::option")]
    pub q: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub schema: String,
    pub kind: ModelKind,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none", with = "matrix_serde::option")]
    pub m: Option<Mat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationSpec>,
}

impl ModelSpec {
    pub fn rectangular_block(p: usize, q: usize, m: Mat) -> Self {
        Self::base(ModelKind::RectangularBlock, p, q, Some(m), None)
    }

    pub fn rectangular_block_seeded(p: usize, q: usize, seed: u64) -> Self {
        Self::base(ModelKind::RectangularBlock, p, q, None, Some(seed))
    }

    pub fn random_graded(p: usize, q: usize, seed: u64) -> Self {
        Self::base(ModelKind::RandomGraded, p, q, None, Some(seed))
    }

    fn base(kind: ModelKind, p: usize, q: usize, m: Option<Mat>, seed: Option<u64>) -> Self {
        Self {
            schema: MODEL_SCHEMA.to_string(),
            kind,
            p,
            q,
            m,
            seed,
            perturbation: None,
        }
    }

    pub fn with_perturbation_seed(mut self, seed: u64, scale: f64) -> Self {
        self.perturbation = Some(PerturbationSpec {
            q: None,
            seed: Some(seed),
            scale,
        });
        self
    }

    pub fn with_perturbation_matrix(mut self, q: Mat, scale: f64) -> Self {
        self.perturbation = Some(PerturbationSpec {
            q: Some(q),
            seed: None,
            scale,
        });
        self
    }

    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        if spec.schema != MODEL_SCHEMA {
            return Err(Error::InvalidModel(format!(
                "unsupported schema {:?}, expected {MODEL_SCHEMA:?}",
                spec.schema
            )));
        }
        Ok(spec)
    }

    /// Hex SHA-256 of the compact JSON serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("model specs always serialize");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub system: Arc<GradedSystem>,
    /// Zero when the spec carries no perturbation.
    pub perturbation: OddPerturbation,
    pub has_perturbation: bool,
    pub digest: String,
}

impl BuiltModel {
    pub fn witten_index(&self) -> f64 {
        self.system.witten_index()
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<BuiltModel> {
    if spec.schema != MODEL_SCHEMA {
        return Err(Error::InvalidModel(format!("unsupported schema {:?}", spec.schema)));
    }
    if spec.p == 0 || spec.q == 0 {
        return Err(Error::InvalidModel("block sizes p and q must be positive".into()));
    }
    let system = match spec.kind {
        ModelKind::RectangularBlock => rectangular_block(spec)?,
        ModelKind::RandomGraded => random_graded(spec)?,
    };
    let g = system.grading().clone();
    let (perturbation, has_perturbation) = match &spec.perturbation {
        None => (OddPerturbation::zero(&g), false),
        Some(ps) => (perturbation(ps, &g)?, true),
    };
    Ok(BuiltModel {
        system: Arc::new(system),
        perturbation,
        has_perturbation,
        digest: spec.digest(),
    })
}

fn block_supercharge(p: usize, q: usize, m: &Mat) -> Mat {
    let mut q0 = Mat::zeros(p + q, p + q);
    for i in 0..q {
        for j in 0..p {
            q0[(p + i, j)] = m[(i, j)];
            q0[(j, p + i)] = m[(i, j)].conj();
        }
    }
    q0
}

fn rectangular_block(spec: &ModelSpec) -> Result<GradedSystem> {
    let (p, q) = (spec.p, spec.q);
    if p == q {
        return Err(Error::ZeroWittenIndex {
            z: 0.0,
            threshold: EPS_WITTEN,
        });
    }
    let m = match (&spec.m, spec.seed) {
        (Some(m), None) => {
            if m.nrows() != q || m.ncols() != p {
                return Err(Error::MalformedMatrix(format!(
                    "M must be {q}x{p}, found {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::MalformedMatrix("M has non-finite entries".into()));
            }
            m.clone()
        }
        (None, Some(seed)) => {
            gaussian_matrix(q, p, &mut rng(seed)).map(|v| v / (p.max(q) as f64).sqrt())
        }
        _ => {
            return Err(Error::InvalidModel(
                "a rectangular block model needs exactly one of M and seed".into(),
            ))
        }
    };
    GradedSystem::new(Grading::standard(p, q)?, block_supercharge(p, q, &m))
}

fn random_graded(spec: &ModelSpec) -> Result<GradedSystem> {
    if spec.m.is_some() {
        return Err(Error::InvalidModel("a random graded model takes a seed, not M".into()));
    }
    let seed = spec
        .seed
        .ok_or_else(|| Error::InvalidModel("a random graded model needs a seed".into()))?;
    let d = spec.dim();
    let mut r = rng(seed);
    let u = random_unitary(d, &mut r);
    let gamma = &u * Grading::standard(spec.p, spec.q)?.matrix() * u.adjoint();
    let g = Grading::new((&gamma + gamma.adjoint()).map(|v| v * 0.5))?;
    let mut last = Error::InvalidModel("no draws attempted".into());
    for _ in 0..MAX_REDRAWS {
        let q0 = random_selfadjoint_odd(&g, &mut r).into_matrix() / C64::new((d as f64).sqrt(), 0.0);
        match GradedSystem::new(g.clone(), q0) {
            Ok(sys) => return Ok(sys),
            Err(e @ Error::ZeroWittenIndex { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn perturbation(ps: &PerturbationSpec, g: &Grading) -> Result<OddPerturbation> {
    if !ps.scale.is_finite() {
        return Err(Error::InvalidPerturbation("scale must be finite".into()));
    }
    let s = C64::new(ps.scale, 0.0);
    let q = match (&ps.q, ps.seed) {
        (Some(q), None) => q * s,
        (None, Some(seed)) => random_selfadjoint_odd(g, &mut rng(seed)).into_matrix() * s,
        _ => {
            return Err(Error::InvalidPerturbation(
                "a perturbation needs exactly one of Q and seed".into(),
            ))
        }
    };
    OddPerturbation::new(g, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangular_block_index_is_p_minus_q() {
        let m = Mat::from_row_slice(1, 2, &[C64::new(0.7, 0.2), C64::new(-0.4, 1.1)]);
        let model = build_model(&ModelSpec::rectangular_block(2, 1, m)).unwrap();
        assert!((model.witten_index() - 1.0).abs() < 1e-12);
        let seeded = build_model(&ModelSpec::rectangular_block_seeded(1, 4, 3)).unwrap();
        assert!((seeded.witten_index() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn equal_blocks_are_rejected() {
        for spec in [ModelSpec::rectangular_block_seeded(2, 2, 1), ModelSpec::random_graded(2, 2, 1)] {
            assert!(matches!(build_model(&spec), Err(Error::ZeroWittenIndex { .. })));
        }
    }

    #[test]
    fn random_graded_is_deterministic() {
        let a = build_model(&ModelSpec::random_graded(3, 2, 42)).unwrap();
        let b = build_model(&ModelSpec::random_graded(3, 2, 42)).unwrap();
        assert_eq!(a.system.supercharge().matrix(), b.system.supercharge().matrix());
        assert_eq!(a.system.grading().matrix(), b.system.grading().matrix());
        assert!((a.witten_index() - 1.0).abs() < 1e-10);
        assert_eq!(a.digest, b.digest);
    }

    #[test]
    fn malformed_inputs() {
        let wrong = ModelSpec::rectangular_block(2, 1, Mat::zeros(2, 1));
        assert!(matches!(build_model(&wrong), Err(Error::MalformedMatrix(_))));
        let mut both = ModelSpec::rectangular_block_seeded(2, 1, 1);
        both.m = Some(Mat::zeros(1, 2));
        assert!(matches!(build_model(&both), Err(Error::InvalidModel(_))));
        let even_q = ModelSpec::rectangular_block_seeded(2, 1, 1).with_perturbation_matrix(Mat::identity(3, 3), 1.0);
        assert!(matches!(build_model(&even_q), Err(Error::InvalidPerturbation(_))));
        assert!(ModelSpec::from_json(r#"{"schema":"other","kind":"RandomGraded","p":2,"q":1}"#).is_err());
        assert!(ModelSpec::from_json(r#"{"schema":"skms-model/1","kind":"RectangularBlock","p":2,"q":1,"M":[[1,2]]}"#).is_err());
    }

    #[test]
    fn json_round_trip_and_digest() {
        let m = Mat::from_row_slice(1, 2, &[C64::new(0.5, -0.25), C64::new(1.0, 0.0)]);
        let spec = ModelSpec::rectangular_block(2, 1, m).with_perturbation_seed(7, 0.3);
        let text = spec.to_json().unwrap();
        assert!(text.contains("\"M\": ["));
        let back = ModelSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.digest(), spec.digest());
        assert_eq!(spec.digest().len(), 64);
        assert_ne!(spec.digest(), ModelSpec::rectangular_block_seeded(2, 1, 1).digest());
        let built = build_model(&back).unwrap();
        assert!(built.has_perturbation);
    }
}
