//! Truncated Dyson series for `αʳ_t` and `γʳ_t(1)`.
//!
//! Real-time terms are iterated integrals over the simplex. Writing
//! `A(v) = α_{vt}(a_r)`, the `n`-th term is `(it)ⁿ W_n(0)` with
//!
//! ```text
//! W_0 = α_t(x),   W_k(s) = ∫_s^1 ad(A(v)) W_{k-1}(v) dv
//! ```
//!
//! (left multiplication instead of `ad` for `γʳ_t(1)`, starting from `1`).
//! The recursion is discretized on Gauss–Legendre nodes with the spectral
//! integration matrix, in the eigenbasis of `H` where `A(v)` is explicit.
//! At `t = i` the terms are heat-kernel chains, taken from one exponential
//! of a block-bidiagonal matrix.

use super::PerturbedContext;
use crate::algebra::{operator_norm, Mat, C64};
use crate::error::{Error, Result};
use crate::kernels::{repeated_chain_integrals, LegendreIntegrator};

/// How to truncate a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesControl {
    /// Smallest order whose tail bound is at most the tolerance.
    Tolerance(f64),
    /// A fixed order, with the tail bound reported.
    Order(usize),
}

/// The time argument of `γʳ_t(1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaTime {
    Real(f64),
    ImaginaryUnit,
}

#[derive(Debug, Clone)]
pub struct SeriesEvaluation {
    pub value: Mat,
    pub order: usize,
    pub tail_bound: f64,
    pub quadrature_error: f64,
}

/// `Σ_{n>N} cⁿ/n!`, summed directly to avoid cancellation.
pub fn exp_tail(c: f64, order: usize) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    for k in 1..=order {
        term *= c / k as f64;
    }
    let mut sum = 0.0;
    let mut n = order + 1;
    loop {
        term *= c / n as f64;
        sum += term;
        if term <= 1e-17 * sum || n > order + 2000 {
            break;
        }
        n += 1;
    }
    sum
}

fn choose_order(c: f64, scale: f64, control: SeriesControl, cap: usize) -> Result<usize> {
    let order = match control {
        SeriesControl::Order(n) => n,
        SeriesControl::Tolerance(tol) => {
            if !(tol > 0.0) {
                return Err(Error::OutOfRange("series tolerance must be positive".into()));
            }
            let mut n = 0;
            while scale * exp_tail(c, n) > tol {
                n += 1;
                if n > cap {
                    break;
                }
            }
            n
        }
    };
    if order > cap {
        return Err(Error::TruncationUnreachable {
            order,
            cap,
            tail: scale * exp_tail(c, cap),
        });
    }
    Ok(order)
}

fn node_count(t: f64, spread: f64) -> usize {
    24 + (t.abs() * spread).ceil() as usize
}

enum Kind<'a> {
    /// `W_k = ∫ ad(A) W_{k-1}` from `W_0 = α_t(x)`.
    Adjoint(&'a Mat),
    /// `V_k = ∫ A V_{k-1}` from `V_0 = 1`.
    Left,
}

/// Sum of `(it)^k W_k(0)` for `k ≤ order` with `m` nodes; eigenbasis in and out.
fn real_time_series(ctx: &PerturbedContext, t: f64, kind: &Kind<'_>, order: usize, m: usize) -> (Mat, f64) {
    let base = ctx.base();
    let spec = base.spectrum();
    let d = base.dim();
    let at = spec.to_eigenbasis(ctx.a_r());
    let li = LegendreIntegrator::new(m);
    let a_nodes: Vec<Mat> = li
        .nodes
        .iter()
        .map(|&v| spec.flow_in_eigenbasis(&at, C64::new(v * t, 0.0)))
        .collect();
    let start = match kind {
        Kind::Adjoint(xt) => spec.flow_in_eigenbasis(xt, C64::new(t, 0.0)),
        Kind::Left => Mat::identity(d, d),
    };
    let mut sum = start.clone();
    let mut term_norms = operator_norm(&start);
    let mut w: Vec<Mat> = vec![start; m];
    let it = C64::new(0.0, t);
    let mut coeff = C64::new(1.0, 0.0);
    for _ in 1..=order {
        let g: Vec<Mat> = (0..m)
            .map(|j| match kind {
                Kind::Adjoint(_) => &a_nodes[j] * &w[j] - &w[j] * &a_nodes[j],
                Kind::Left => &a_nodes[j] * &w[j],
            })
            .collect();
        let mut at_zero = Mat::zeros(d, d);
        for (gj, wj) in g.iter().zip(&li.weights) {
            at_zero += gj * C64::new(*wj, 0.0);
        }
        for (i, row) in li.integral.iter().enumerate() {
            let mut acc = Mat::zeros(d, d);
            for (gj, s) in g.iter().zip(row) {
                acc += gj * C64::new(*s, 0.0);
            }
            w[i] = acc;
        }
        coeff *= it;
        let term = at_zero * coeff;
        term_norms += operator_norm(&term);
        sum += term;
    }
    (sum, term_norms)
}

/// `αʳ_t(x)` by the truncated Dyson series.
pub fn dyson_alpha(ctx: &PerturbedContext, x: &Mat, t: f64, control: SeriesControl) -> Result<SeriesEvaluation> {
    let xn = operator_norm(x);
    let c = t.abs() * 2.0 * operator_norm(ctx.a_r());
    let order = choose_order(c, xn, control, ctx.series_cap())?;
    let tail_bound = xn * exp_tail(c, order);
    if t == 0.0 {
        return Ok(SeriesEvaluation {
            value: x.clone(),
            order,
            tail_bound: 0.0,
            quadrature_error: 0.0,
        });
    }
    let spec = ctx.base().spectrum();
    let xt = spec.to_eigenbasis(x);
    let m = node_count(t, spec.spread());
    let (v, norms) = real_time_series(ctx, t, &Kind::Adjoint(&xt), order, m);
    let (v2, _) = real_time_series(ctx, t, &Kind::Adjoint(&xt), order, m + 8);
    let quadrature_error = operator_norm(&(&v - &v2)) + 64.0 * f64::EPSILON * norms;
    Ok(SeriesEvaluation {
        value: spec.from_eigenbasis(&v),
        order,
        tail_bound,
        quadrature_error,
    })
}

/// `γʳ_t(1)` by the truncated Dyson series, at real `t` or at `t = i`.
pub fn dyson_gamma_one(ctx: &PerturbedContext, time: GammaTime, control: SeriesControl) -> Result<SeriesEvaluation> {
    let base = ctx.base();
    let spec = base.spectrum();
    let d = base.dim();
    let a_norm = operator_norm(ctx.a_r());
    match time {
        GammaTime::Real(t) => {
            let c = t.abs() * a_norm;
            let order = choose_order(c, 1.0, control, ctx.series_cap())?;
            let tail_bound = exp_tail(c, order);
            if t == 0.0 {
                return Ok(SeriesEvaluation {
                    value: Mat::identity(d, d),
                    order,
                    tail_bound: 0.0,
                    quadrature_error: 0.0,
                });
            }
            let m = node_count(t, spec.spread());
            let (v, norms) = real_time_series(ctx, t, &Kind::Left, order, m);
            let (v2, _) = real_time_series(ctx, t, &Kind::Left, order, m + 8);
            Ok(SeriesEvaluation {
                value: spec.from_eigenbasis(&v),
                order,
                tail_bound,
                quadrature_error: operator_norm(&(&v - &v2)) + 64.0 * f64::EPSILON * norms,
            })
        }
        GammaTime::ImaginaryUnit => {
            // ‖T_n‖ ≤ ‖a‖ⁿ/n! since H ≥ 0, and each term carries e^{H}.
            let lift = spec.max_value().exp();
            let order = choose_order(a_norm, lift, control, ctx.series_cap())?;
            let tail_bound = lift * exp_tail(a_norm, order);
            let chains = repeated_chain_integrals(spec, ctx.a_r(), order);
            let mut sum = Mat::zeros(d, d);
            for (k, t_k) in chains.iter().enumerate() {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sum += t_k * C64::new(sign, 0.0);
            }
            let anti = spec.apply(|l| C64::new(l.exp(), 0.0));
            let rounding = 64.0 * f64::EPSILON * lift * a_norm.exp() * (d as f64);
            Ok(SeriesEvaluation {
                value: sum * anti,
                order,
                tail_bound,
                quadrature_error: rounding,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::fixture;
    use super::*;
    use crate::algebra::max_abs;
    use crate::dynamics::{unit_element, ComplexTime};
    use crate::sample::rng;

    #[test]
    fn tail_sum_matches_closed_form() {
        let c: f64 = 1.7;
        let head: f64 = (0..=5).map(|n| c.powi(n) / (1..=n).product::<i32>().max(1) as f64).sum();
        assert!((exp_tail(c, 5) - (c.exp() - head)).abs() < 1e-14);
        assert_eq!(exp_tail(0.0, 3), 0.0);
    }

    #[test]
    fn order_cap_is_enforced() {
        let ctx = fixture(2, 1, 1, 0.8, 1.0).with_series_cap(3);
        let x = Mat::identity(3, 3);
        assert!(matches!(
            dyson_alpha(&ctx, &x, 1.0, SeriesControl::Tolerance(1e-14)),
            Err(Error::TruncationUnreachable { cap: 3, .. })
        ));
        assert!(dyson_alpha(&ctx, &x, 1.0, SeriesControl::Order(4)).is_err());
    }

    #[test]
    fn zero_coupling_gives_free_flow() {
        let ctx = fixture(3, 1, 2, 0.6, 0.0);
        let x = unit_element(ctx.base().grading(), &mut rng(1)).into_matrix();
        let s = dyson_alpha(&ctx, &x, 0.8, SeriesControl::Tolerance(1e-12)).unwrap();
        let free = ctx.alpha_r_exact(&x, ComplexTime::real(0.8));
        assert!(max_abs(&(s.value - free)) < 1e-13);
        let g = dyson_gamma_one(&ctx, GammaTime::ImaginaryUnit, SeriesControl::Tolerance(1e-12)).unwrap();
        assert!(max_abs(&(g.value - Mat::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn alpha_series_matches_exact_conjugation() {
        for (seed, t) in [(3u64, 1.0), (4, -0.6), (5, 0.25)] {
            let ctx = fixture(3, 2, seed, 0.5, 0.7);
            let x = unit_element(ctx.base().grading(), &mut rng(seed)).into_matrix();
            let s = dyson_alpha(&ctx, &x, t, SeriesControl::Tolerance(1e-12)).unwrap();
            let exact = ctx.alpha_r_exact(&x, ComplexTime::real(t));
            let err = operator_norm(&(&s.value - exact));
            assert!(err <= s.tail_bound + s.quadrature_error, "t={t}: {err} vs {}", s.tail_bound);
            assert!(err < 1e-11);
        }
    }

    #[test]
    fn gamma_series_matches_exact_products() {
        let ctx = fixture(3, 2, 6, 0.5, 0.9);
        for t in [1.0, -0.4] {
            let s = dyson_gamma_one(&ctx, GammaTime::Real(t), SeriesControl::Tolerance(1e-13)).unwrap();
            let err = operator_norm(&(&s.value - ctx.gamma_r_one_exact(t)));
            assert!(err <= s.tail_bound + s.quadrature_error && err < 1e-12, "t={t}: {err}");
        }
        let s = dyson_gamma_one(&ctx, GammaTime::ImaginaryUnit, SeriesControl::Tolerance(1e-12)).unwrap();
        let err = operator_norm(&(&s.value - ctx.gamma_r_i_exact()));
        assert!(err <= s.tail_bound + s.quadrature_error, "{err} vs {}", s.tail_bound);
        assert!(err < 1e-11);
    }

    #[test]
    fn alpha_series_group_law() {
        let ctx = fixture(2, 1, 7, 0.6, 0.5);
        let x = unit_element(ctx.base().grading(), &mut rng(2)).into_matrix();
        let tol = SeriesControl::Tolerance(1e-12);
        let inner = dyson_alpha(&ctx, &x, 0.4, tol).unwrap();
        let outer = dyson_alpha(&ctx, &inner.value, 0.5, tol).unwrap();
        let direct = dyson_alpha(&ctx, &x, 0.9, tol).unwrap();
        let bound = inner.tail_bound + inner.quadrature_error + outer.tail_bound + outer.quadrature_error
            + direct.tail_bound + direct.quadrature_error;
        assert!(operator_norm(&(outer.value - direct.value)) <= bound);
    }
}
