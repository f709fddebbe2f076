//! Finite-dimensional super-KMS functionals, JLO cochains and their
//! perturbation theory on graded matrix algebras.

pub mod algebra;
pub mod cochain;
pub mod dynamics;
pub mod error;
pub mod kernels;
pub mod model;
pub mod perturbation;
pub mod report;
pub mod sample;
pub mod suite;

pub use algebra::{Element, Grading, Mat, Parity, C64};
pub use error::{Error, Result};
