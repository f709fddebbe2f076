//! Heat-kernel chain integrals over the ordered simplex.
//!
//! The workhorse identity is Hermite–Genocchi: for nodes `μ_0..μ_n`
//!
//! ```text
//! ∫_{Δ_n} exp(-Σ_k w_k(s) μ_k) ds  =  (-1)^n · (e^{-t})[μ_0, …, μ_n]
//! ```
//!
//! where `w(s) = (s_1, s_2 - s_1, …, 1 - s_n)` are barycentric weights. The
//! left-hand side is what [`exp_divided_difference`] returns; it is positive
//! and symmetric in the nodes, and equals `e^{-μ}/n!` when all nodes coincide.
//! Chain integrals of matrices reduce to sums of these scalars in the
//! eigenbasis of the generator.

use std::collections::HashMap;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{Grading, Mat, C64};
use crate::error::{Error, Result};

/// Eigenvalues closer than this are merged before divided differences are
/// memoized.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Below this node spread the divided difference switches to a Taylor series.
pub const CONFLUENT_SPREAD: f64 = 1e-6;
/// Default limit on the number of index chains summed by [`chain_integral`].
pub const DEFAULT_CHAIN_BUDGET: u128 = 100_000_000;
/// Highest simplex dimension accepted by the tensor Gauss rule.
pub const MAX_GAUSS_DEGREE: usize = 6;

/// Chain budget from `SKMS_CHAIN_BUDGET`, falling back to
/// [`DEFAULT_CHAIN_BUDGET`] when unset or unparsable.
pub fn chain_budget() -> u128 {
    std::env::var("SKMS_CHAIN_BUDGET")
        .ok()
        .and_then(|v| v.trim().parse::<u128>().ok())
        .unwrap_or(DEFAULT_CHAIN_BUDGET)
}

/// Nodes `μ_0, …, μ_n` of an exponential divided difference.
#[derive(Debug, Clone, PartialEq)]
pub struct DividedDifferenceRequest {
    nodes: Vec<f64>,
}

impl DividedDifferenceRequest {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidDegree {
                degree: 0,
                reason: "at least one node is required",
            });
        }
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("divided-difference nodes must be finite".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn evaluate(&self) -> f64 {
        exp_divided_difference(&self.nodes)
    }
}

/// `∫_{Δ_n} exp(-Σ w_k μ_k) ds`, stable under node clustering.
///
/// Uses the corner entry of the exponential of the bidiagonal matrix
/// `diag(μ_max - μ_k) + superdiag(1)`, which has nonnegative entries, so
/// Taylor scaling-and-squaring involves no cancellation. Nearly confluent
/// nodes go through a Taylor expansion about their mean.
pub fn exp_divided_difference(nodes: &[f64]) -> f64 {
    let n = nodes.len().saturating_sub(1);
    if nodes.is_empty() {
        return 0.0;
    }
    if n == 0 {
        return (-nodes[0]).exp();
    }
    let hi = nodes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = nodes.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = hi - lo;
    if spread < CONFLUENT_SPREAD {
        return confluent_taylor(nodes);
    }
    // e^{spread} must stay representable; beyond that accept a centred shift.
    let shift = if spread <= 500.0 { hi } else { 0.5 * (hi + lo) };
    let size = n + 1;
    let mut a = vec![0.0; size * size];
    for k in 0..size {
        a[k * size + k] = shift - nodes[k];
        if k + 1 < size {
            a[k * size + k + 1] = 1.0;
        }
    }
    let e = expm_upper_triangular(&a, size);
    (-shift).exp() * e[n]
}

fn confluent_taylor(nodes: &[f64]) -> f64 {
    let n = nodes.len() - 1;
    let mean = nodes.iter().sum::<f64>() / nodes.len() as f64;
    let dev: Vec<f64> = nodes.iter().map(|v| v - mean).collect();
    const TERMS: usize = 8;
    // h[k] = complete homogeneous symmetric polynomial of degree k in `dev`.
    let mut h = [0.0f64; TERMS];
    h[0] = 1.0;
    for &d in &dev {
        for k in 1..TERMS {
            h[k] += d * h[k - 1];
        }
    }
    let mut fact = (1..=n).fold(1.0f64, |acc, k| acc * k as f64);
    let mut sum = 0.0;
    for (k, hk) in h.iter().enumerate() {
        if k > 0 {
            fact *= (n + k) as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * hk / fact;
    }
    (-mean).exp() * sum
}

/// `exp(A)` for an upper-triangular matrix with nonnegative entries, row-major.
fn expm_upper_triangular(a: &[f64], size: usize) -> Vec<f64> {
    let norm = (0..size)
        .map(|i| (0..size).map(|j| a[i * size + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled: Vec<f64> = a.iter().map(|v| v * scale).collect();
    let mut result = vec![0.0; size * size];
    for i in 0..size {
        result[i * size + i] = 1.0;
    }
    let mut term = result.clone();
    for k in 1..40 {
        term = tri_mul(&term, &scaled, size);
        let inv = 1.0 / k as f64;
        term.iter_mut().for_each(|v| *v *= inv);
        let mut biggest = 0.0f64;
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
            biggest = biggest.max(t.abs());
        }
        if biggest <= 1e-18 * (1.0 + result.iter().cloned().fold(0.0, f64::max)) && k >= size {
            break;
        }
    }
    for _ in 0..squarings {
        result = tri_mul(&result, &result, size);
    }
    result
}

fn tri_mul(a: &[f64], b: &[f64], size: usize) -> Vec<f64> {
    let mut c = vec![0.0; size * size];
    for i in 0..size {
        for k in i..size {
            let aik = a[i * size + k];
            if aik == 0.0 {
                continue;
            }
            for j in k..size {
                c[i * size + j] += aik * b[k * size + j];
            }
        }
    }
    c
}

/// Spectral decomposition `H = U diag(λ) U*` of a Hermitian generator, with
/// eigenvalues sorted ascending and grouped into clusters of width
/// [`CLUSTER_TOL`].
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
    basis: Mat,
    cluster_of: Vec<usize>,
    cluster_values: Vec<f64>,
}

impl Spectrum {
    pub fn of_hermitian(h: &Mat) -> Result<Self> {
        let (r, c) = h.shape();
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        let sym = (h + h.adjoint()).map(|v| v * 0.5);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let basis = Mat::from_fn(r, r, |i, j| eig.eigenvectors[(i, order[j])]);

        let mut cluster_of = Vec::with_capacity(r);
        let mut cluster_values: Vec<f64> = Vec::new();
        let mut members: Vec<Vec<f64>> = Vec::new();
        for (k, &v) in values.iter().enumerate() {
            if k > 0 && v - values[k - 1] <= CLUSTER_TOL {
                members.last_mut().expect("cluster exists").push(v);
            } else {
                members.push(vec![v]);
            }
            cluster_of.push(members.len() - 1);
        }
        for m in &members {
            cluster_values.push(m.iter().sum::<f64>() / m.len() as f64);
        }
        Ok(Self {
            values,
            basis,
            cluster_of,
            cluster_values,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_values.len()
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn spread(&self) -> f64 {
        self.max_value() - self.min_value()
    }

    /// `U* x U`.
    pub fn to_eigenbasis(&self, x: &Mat) -> Mat {
        self.basis.adjoint() * x * &self.basis
    }

    /// `U x U*`.
    pub fn from_eigenbasis(&self, x: &Mat) -> Mat {
        &self.basis * x * self.basis.adjoint()
    }

    /// `f(H) = U f(Λ) U*`.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> Mat {
        let d = self.dim();
        let mut scaled = self.basis.clone();
        for j in 0..d {
            let fj = f(self.values[j]);
            for i in 0..d {
                scaled[(i, j)] *= fj;
            }
        }
        scaled * self.basis.adjoint()
    }

    /// `e^{izH} x e^{-izH}` for `x` already in the eigenbasis.
    pub fn flow_in_eigenbasis(&self, x: &Mat, z: C64) -> Mat {
        let i = C64::new(0.0, 1.0);
        Mat::from_fn(x.nrows(), x.ncols(), |j, k| {
            x[(j, k)] * (i * z * (self.values[j] - self.values[k])).exp()
        })
    }
}

/// Memoized divided differences keyed by the multiset of eigenvalue clusters.
struct DdTable {
    base: u128,
    powers: Vec<u128>,
    dense: Option<Vec<f64>>,
    sparse: HashMap<u128, f64>,
}

impl DdTable {
    fn build(spec: &Spectrum, n: usize) -> Self {
        let k = spec.cluster_count();
        let base = (n + 2) as u128;
        let mut powers = Vec::with_capacity(k);
        let mut p: u128 = 1;
        let mut dense_ok = true;
        for _ in 0..k {
            powers.push(p);
            p = p.saturating_mul(base);
            if p > 1 << 22 {
                dense_ok = false;
            }
        }
        let mut dense = dense_ok.then(|| vec![f64::NAN; p as usize]);
        let mut sparse = HashMap::new();
        let mut counts = vec![0usize; k];
        let mut emit = |counts: &[usize]| {
            let mut key = 0u128;
            let mut nodes = Vec::with_capacity(n + 1);
            for (c, &m) in counts.iter().enumerate() {
                key += m as u128 * powers[c];
                nodes.extend(std::iter::repeat_n(spec.cluster_values[c], m));
            }
            let v = exp_divided_difference(&nodes);
            match dense.as_mut() {
                Some(t) => t[key as usize] = v,
                None => {
                    sparse.insert(key, v);
                }
            }
        };
        enumerate_multisets(&mut counts, 0, n + 1, &mut emit);
        Self {
            base,
            powers,
            dense,
            sparse,
        }
    }

    #[inline]
    fn get(&self, key: u128) -> f64 {
        match &self.dense {
            Some(t) => t[key as usize],
            None => self.sparse[&key],
        }
    }
}

fn enumerate_multisets(
    counts: &mut [usize],
    from: usize,
    remaining: usize,
    emit: &mut impl FnMut(&[usize]),
) {
    if remaining == 0 {
        emit(counts);
        return;
    }
    if from == counts.len() {
        return;
    }
    for take in (0..=remaining).rev() {
        counts[from] = take;
        if from + 1 == counts.len() && take != remaining {
            continue;
        }
        enumerate_multisets(counts, from + 1, remaining - take, emit);
    }
    counts[from] = 0;
}

fn chain_terms(d: usize, n: usize) -> u128 {
    (d as u128).saturating_pow((n + 1) as u32)
}

/// `∫_{Δ_n} Tr(Γ x_0 e^{-s_1 H} x_1 e^{-(s_2-s_1)H} ⋯ x_n e^{-(1-s_n)H}) dⁿs`.
///
/// Summed over index chains `i_0..i_n` in the eigenbasis of `H`; each chain
/// contributes `(Γx_0)_{i_0 i_1} (x_1)_{i_1 i_2} ⋯ (x_n)_{i_n i_0}` times the
/// divided difference at `λ_{i_0}, …, λ_{i_n}`. Summation over `i_0` runs in
/// parallel and is reduced in index order, so results are reproducible.
pub fn chain_integral(
    spec: &Spectrum,
    xs: &[&Mat],
    grading: &Grading,
    budget: u128,
) -> Result<C64> {
    let d = spec.dim();
    if xs.is_empty() {
        return Err(Error::InvalidDegree {
            degree: 0,
            reason: "chain integral needs at least x_0",
        });
    }
    if grading.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: grading.dim(),
        });
    }
    for x in xs {
        if x.nrows() != d || x.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.nrows(),
            });
        }
    }
    let n = xs.len() - 1;
    let terms = chain_terms(d, n);
    if terms > budget {
        return Err(Error::ChainBudgetExceeded { terms, budget });
    }
    let gamma = spec.to_eigenbasis(grading.matrix());
    let mut mats: Vec<Mat> = xs.iter().map(|x| spec.to_eigenbasis(x)).collect();
    mats[0] = &gamma * &mats[0];
    if n == 0 {
        let m = &mats[0];
        return Ok((0..d)
            .map(|i| m[(i, i)] * (-spec.values[i]).exp())
            .sum());
    }
    let table = DdTable::build(spec, n);
    let partial: Vec<C64> = (0..d)
        .into_par_iter()
        .map(|i0| {
            let key0 = table.powers[spec.cluster_of[i0]];
            let mut acc = C64::new(0.0, 0.0);
            chain_walk(
                spec,
                &mats,
                &table,
                i0,
                1,
                i0,
                C64::new(1.0, 0.0),
                key0,
                &mut acc,
            );
            acc
        })
        .collect();
    Ok(partial.into_iter().fold(C64::new(0.0, 0.0), |a, b| a + b))
}

#[allow(clippy::too_many_arguments)]
fn chain_walk(
    spec: &Spectrum,
    mats: &[Mat],
    table: &DdTable,
    i0: usize,
    level: usize,
    prev: usize,
    prod: C64,
    key: u128,
    acc: &mut C64,
) {
    let n = mats.len() - 1;
    let d = spec.dim();
    let m = &mats[level - 1];
    for next in 0..d {
        let a = m[(prev, next)];
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let p = prod * a;
        let k = key + table.powers[spec.cluster_of[next]];
        if level == n {
            let close = mats[n][(next, i0)];
            if close.re == 0.0 && close.im == 0.0 {
                continue;
            }
            *acc += p * close * table.get(k);
        } else {
            chain_walk(spec, mats, table, i0, level + 1, next, p, k, acc);
        }
    }
    debug_assert!(table.base > 0);
}

/// Matrix-valued chains `T_k = ∫_{Δ_k} e^{-s_1 H} a e^{-(s_2-s_1)H} a ⋯ a e^{-(1-s_k)H} dᵏs`
/// for `k = 0..=order`, returned in the original basis.
///
/// Entry `(i, j)` of `T_k` in the eigenbasis is the sum over index paths of
/// products of `a`-entries times the divided difference along the path; all
/// paths at once are the corner blocks of the exponential of the
/// block-bidiagonal matrix with `-Λ` on the diagonal and `a` above it.
pub fn repeated_chain_integrals(spec: &Spectrum, a: &Mat, order: usize) -> Vec<Mat> {
    let d = spec.dim();
    let at = spec.to_eigenbasis(a);
    let size = (order + 1) * d;
    let mut big = Mat::zeros(size, size);
    for blk in 0..=order {
        for i in 0..d {
            big[(blk * d + i, blk * d + i)] = C64::new(-spec.values[i], 0.0);
        }
        if blk < order {
            for i in 0..d {
                for j in 0..d {
                    big[(blk * d + i, (blk + 1) * d + j)] = at[(i, j)];
                }
            }
        }
    }
    let e = big.exp();
    (0..=order)
        .map(|k| {
            let blk = e.view((0, k * d), (d, d)).into_owned();
            spec.from_eigenbasis(&blk)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum QuadratureKind {
    GaussTensorDuffy,
    MonteCarlo,
}

/// A deterministic quadrature rule on `Δ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SimplexQuadratureRule {
    pub kind: QuadratureKind,
    pub order_or_samples: usize,
    pub seed: u64,
}

impl SimplexQuadratureRule {
    pub fn gauss(order: usize) -> Self {
        Self {
            kind: QuadratureKind::GaussTensorDuffy,
            order_or_samples: order,
            seed: 0,
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self {
            kind: QuadratureKind::MonteCarlo,
            order_or_samples: samples,
            seed,
        }
    }

    /// Parses `gauss:<order>` or `mc:<samples>`.
    pub fn parse(spec: &str, seed: u64) -> Result<Self> {
        let (kind, count) = spec
            .split_once(':')
            .ok_or_else(|| Error::InvalidRule(format!("expected kind:count, got {spec:?}")))?;
        let count: usize = count
            .parse()
            .map_err(|_| Error::InvalidRule(format!("bad count in {spec:?}")))?;
        if count == 0 {
            return Err(Error::InvalidRule("count must be positive".into()));
        }
        match kind {
            "gauss" => Ok(Self::gauss(count)),
            "mc" => Ok(Self::monte_carlo(count, seed)),
            other => Err(Error::InvalidRule(format!("unknown rule kind {other:?}"))),
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    if m == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule on `[0, 1]` with its spectral integration matrix.
///
/// `integral[(i, j)]` is `∫_{v_i}^1 ℓ_j(v) dv` for the Lagrange basis `ℓ_j` on
/// the nodes, so for samples `g_j = g(v_j)` of a smooth function,
/// `Σ_j integral[(i, j)] g_j ≈ ∫_{v_i}^1 g`.
#[derive(Debug, Clone)]
pub struct LegendreIntegrator {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub integral: Vec<Vec<f64>>,
}

impl LegendreIntegrator {
    pub fn new(m: usize) -> Self {
        let (xi, w) = gauss_legendre(m);
        // p[k][i] = P_k(ξ_i) for k = 0..=m.
        let mut p = vec![vec![1.0; m]; m + 1];
        if m > 0 {
            p[1] = xi.clone();
        }
        for k in 2..=m {
            for i in 0..m {
                p[k][i] = ((2 * k - 1) as f64 * xi[i] * p[k - 1][i] - (k - 1) as f64 * p[k - 2][i])
                    / k as f64;
            }
        }
        let integral = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        // ∫_{ξ_i}^1 P_0 = 1 - ξ_i and ∫_{ξ_i}^1 P_k = (P_{k-1} - P_{k+1})(ξ_i)/(2k+1).
                        let mut acc = 0.5 * (1.0 - xi[i]);
                        for k in 1..m {
                            acc += 0.5 * p[k][j] * (p[k - 1][i] - p[k + 1][i]);
                        }
                        0.5 * w[j] * acc
                    })
                    .collect()
            })
            .collect();
        Self {
            nodes: xi.iter().map(|x| 0.5 * (x + 1.0)).collect(),
            weights: w.iter().map(|x| 0.5 * x).collect(),
            integral,
        }
    }
}

/// Maps a point of the unit cube onto `Δ_n` (`0 ≤ s_1 ≤ … ≤ s_n ≤ 1`) and
/// returns the Jacobian of the ordered transform.
pub fn cube_to_simplex(u: &[f64], s: &mut [f64]) -> f64 {
    let n = u.len();
    let mut acc = 1.0;
    let mut jac = 1.0;
    for k in (0..n).rev() {
        if k + 1 < n {
            jac *= acc;
        }
        acc *= u[k];
        s[k] = acc;
    }
    jac
}

fn gauss_tensor<F>(f: &F, n: usize, m: usize) -> C64
where
    F: Fn(&[f64]) -> C64 + Sync,
{
    let (x, w) = gauss_legendre(m);
    let nodes: Vec<f64> = x.iter().map(|v| 0.5 * (v + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|v| 0.5 * v).collect();
    let total = m.pow(n as u32 - 1);
    let partial: Vec<C64> = (0..m)
        .into_par_iter()
        .map(|first| {
            let mut u = vec![0.0; n];
            let mut s = vec![0.0; n];
            let mut acc = C64::new(0.0, 0.0);
            for rest in 0..total {
                u[0] = nodes[first];
                let mut wt = weights[first];
                let mut r = rest;
                for slot in u.iter_mut().skip(1) {
                    let k = r % m;
                    r /= m;
                    *slot = nodes[k];
                    wt *= weights[k];
                }
                let jac = cube_to_simplex(&u, &mut s);
                acc += f(&s) * (wt * jac);
            }
            acc
        })
        .collect();
    partial.into_iter().fold(C64::new(0.0, 0.0), |a, b| a + b)
}

const MC_CHUNK: usize = 4096;

fn monte_carlo<F>(f: &F, n: usize, samples: usize, seed: u64) -> (C64, f64)
where
    F: Fn(&[f64]) -> C64 + Sync,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let stats: Vec<(C64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(c as u64 + 1);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut s = vec![0.0; n];
            let mut sum = C64::new(0.0, 0.0);
            let mut sq_re = 0.0;
            let mut sq_im = 0.0;
            for _ in 0..count {
                for v in s.iter_mut() {
                    *v = r.random::<f64>();
                }
                s.sort_by(f64::total_cmp);
                let v = f(&s);
                sum += v;
                sq_re += v.re * v.re;
                sq_im += v.im * v.im;
            }
            (sum, sq_re, sq_im)
        })
        .collect();
    let (sum, sq_re, sq_im) = stats.into_iter().fold(
        (C64::new(0.0, 0.0), 0.0, 0.0),
        |(a, b, c), (x, y, z)| (a + x, b + y, c + z),
    );
    let nf = samples as f64;
    let mean = sum / nf;
    let var_re = (sq_re / nf - mean.re * mean.re).max(0.0) * nf / (nf - 1.0).max(1.0);
    let var_im = (sq_im / nf - mean.im * mean.im).max(0.0) * nf / (nf - 1.0).max(1.0);
    let volume = 1.0 / factorial(n);
    (mean * volume, ((var_re + var_im) / nf).sqrt() * volume)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Integrates `f` over `Δ_n`, returning `(value, error_estimate)`.
///
/// For the Gauss rule the error estimate is the difference to the rule of one
/// lower order; for Monte Carlo it is the standard error of the mean.
pub fn simplex_quadrature<F>(f: F, n: usize, rule: &SimplexQuadratureRule) -> Result<(C64, f64)>
where
    F: Fn(&[f64]) -> C64 + Sync,
{
    if rule.order_or_samples == 0 {
        return Err(Error::InvalidRule("order or sample count must be positive".into()));
    }
    if n == 0 {
        return Ok((f(&[]), 0.0));
    }
    match rule.kind {
        QuadratureKind::GaussTensorDuffy => {
            if n > MAX_GAUSS_DEGREE {
                return Err(Error::QuadratureCost(n));
            }
            let m = rule.order_or_samples;
            let v = gauss_tensor(&f, n, m);
            let err = if m > 1 {
                (v - gauss_tensor(&f, n, m - 1)).norm()
            } else {
                f64::INFINITY
            };
            Ok((v, err))
        }
        QuadratureKind::MonteCarlo => {
            Ok(monte_carlo(&f, n, rule.order_or_samples, rule.seed))
        }
    }
}
