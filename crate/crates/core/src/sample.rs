//! Seeded random elements used by the verifiers and the test-suites.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{Element, Grading, Mat, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian with `E|z|^2 = 1`.
pub fn gaussian(r: &mut SeededRng) -> C64 {
    let re: f64 = StandardNormal.sample(r);
    let im: f64 = StandardNormal.sample(r);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix(rows: usize, cols: usize, r: &mut SeededRng) -> Mat {
    let entries: Vec<C64> = (0..rows * cols).map(|_| gaussian(r)).collect();
    Mat::from_row_slice(rows, cols, &entries)
}

/// Haar-ish unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary(d: usize, r: &mut SeededRng) -> Mat {
    let qr = gaussian_matrix(d, d, r).qr();
    let q = qr.q();
    let rr = qr.r();
    let mut u = q;
    for j in 0..d {
        let diag = rr[(j, j)];
        let phase = if diag.norm() > 0.0 {
            diag / diag.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

pub fn random_element(g: &Grading, r: &mut SeededRng) -> Element {
    let d = g.dim();
    g.from_matrix_unchecked_parity(gaussian_matrix(d, d, r))
}

pub fn random_even(g: &Grading, r: &mut SeededRng) -> Element {
    let x = random_element(g, r);
    g.parity_split(&x).expect("dimension matches").0
}

pub fn random_odd(g: &Grading, r: &mut SeededRng) -> Element {
    let x = random_element(g, r);
    g.parity_split(&x).expect("dimension matches").1
}

pub fn random_selfadjoint_odd(g: &Grading, r: &mut SeededRng) -> Element {
    let x = random_odd(g, r);
    let h = (x.matrix() + x.matrix().adjoint()).map(|v| v * 0.5);
    g.from_matrix_unchecked_parity(h)
}
