//! Error-function helpers in log space and Hermite polynomials.

use libm::{erf, erfc};

const ASYMPTOTIC_CUTOFF: f64 = 10.0;
const ASYMPTOTIC_TERMS: usize = 12;

/// `ln erfc(x)`, accurate in the far tail where `erfc` itself underflows.
pub fn log_erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= ASYMPTOTIC_CUTOFF {
        return erfc(x).ln();
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    // erfc(x) ~ exp(-x²)/(x√π) · Σ (-1)^m (2m-1)!! / (2x²)^m
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for m in 1..=ASYMPTOTIC_TERMS {
        term *= -((2 * m - 1) as f64) * inv;
        series += term;
    }
    -x * x - x.ln() - 0.5 * std::f64::consts::PI.ln() + series.ln()
}

/// `ln γ([a, b])` for the one-dimensional Gaussian measure `π^{-1/2} e^{-x²} dx`,
/// i.e. `ln((erf(b) - erf(a)) / 2)`, without cancellation in either tail.
pub fn log_gamma_interval(a: f64, b: f64) -> f64 {
    if !(b > a) {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        upper_tail_difference(a, b)
    } else if b <= 0.0 {
        upper_tail_difference(-b, -a)
    } else {
        ((erf(b) + erf(-a)) / 2.0).ln()
    }
}

// ln((erfc(a) - erfc(b)) / 2) for 0 <= a < b.
fn upper_tail_difference(a: f64, b: f64) -> f64 {
    let la = log_erfc(a);
    let lb = log_erfc(b);
    la + (-(lb - la).exp_m1()).ln() - std::f64::consts::LN_2
}

/// Physicists' Hermite polynomial `H_k(x)`; eigenfunctions of `½Δ - x·∇` in 1D.
pub fn hermite(k: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for j in 1..k {
        let next = 2.0 * x * cur - 2.0 * j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}
