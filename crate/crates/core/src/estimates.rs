//! Closed-form thresholds and bounds for `L^p(γ)`–`L^q(γ)` off-diagonal estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lognum::LogNumber;
use crate::mehler::TimeParam;

/// Parameters `(p, q, θ, c)` of the estimate
/// `‖1_F e^{tL} 1_E f‖_q ≤ K t^{−θ} exp(−c·dist(E,F)²/t) ‖1_E f‖_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagHypothesis {
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    pub c: f64,
}

impl OffDiagHypothesis {
    pub fn new(p: f64, q: f64, theta: f64, c: f64) -> Result<Self> {
        check_exponents(p, q)?;
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(Error::invalid(
                "theta",
                format!("must be finite and non-negative, got {theta}"),
            ));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("c", format!("must be positive, got {c}")));
        }
        Ok(OffDiagHypothesis { p, q, theta, c })
    }

    /// `θ = 0`, `c = ½`, the Davies–Gaffney decay rate.
    pub fn with_defaults(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, 0.0, 0.5)
    }

    /// `1/p − 1/q`, which lies in `(0, 1)`.
    pub fn gap(&self) -> f64 {
        1.0 / self.p - 1.0 / self.q
    }
}

/// The unquantified constant of the L²–L² Davies–Gaffney bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McIntoshConstant(f64);

impl McIntoshConstant {
    pub fn new(c: f64) -> Result<Self> {
        if c > 0.0 && c.is_finite() {
            Ok(McIntoshConstant(c))
        } else {
            Err(Error::invalid("C", format!("must be positive, got {c}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for McIntoshConstant {
    fn default() -> Self {
        McIntoshConstant(1.0)
    }
}

pub(crate) fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid("p", format!("must be finite and at least 1, got {p}")));
    }
    if !q.is_finite() {
        return Err(Error::invalid("q", "must be finite"));
    }
    if !(p < q) {
        return Err(Error::invalid("q", format!("must exceed p = {p}, got {q}")));
    }
    Ok(())
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("dist", format!("must be positive, got {d}")))
    }
}

/// `C·(t/d)·exp(−d²/(2t))`.
pub fn davies_gaffney_bound(t: TimeParam, d: f64, c: McIntoshConstant) -> Result<f64> {
    Ok(davies_gaffney_bound_log(t, d, c)?.exp())
}

/// Natural log of [`davies_gaffney_bound`].
pub fn davies_gaffney_bound_log(t: TimeParam, d: f64, c: McIntoshConstant) -> Result<f64> {
    check_distance(d)?;
    let t = t.value();
    Ok(c.value().ln() + t.ln() - d.ln() - d * d / (2.0 * t))
}

/// Smallest exponent `1 + e^{−2t}` above which `e^{tL}: L^p → L²` contracts.
pub fn nelson_min_p(t: TimeParam) -> f64 {
    1.0 + (-2.0 * t.value()).exp()
}

/// `δ(p,t) = (½ − 1/p) / (½ − 1/(1+e^{−2t}))` for `p ∈ (1+e^{−2t}, 2]`.
pub fn delta_exponent(p: f64, t: TimeParam) -> Result<f64> {
    let p_min = nelson_min_p(t);
    if !(p > p_min && p <= 2.0) {
        return Err(Error::invalid(
            "p",
            format!("must lie in ({p_min}, 2] for t = {}, got {p}", t.value()),
        ));
    }
    Ok((0.5 - 1.0 / p) / (0.5 - 1.0 / p_min))
}

/// `(1 − δ(p,t)) · ln(C (t/d) e^{−d²/2t})`.
pub fn interpolated_bound_log(p: f64, t: TimeParam, d: f64, c: McIntoshConstant) -> Result<LogNumber> {
    let delta = delta_exponent(p, t)?;
    let dg = davies_gaffney_bound_log(t, d, c)?;
    Ok(LogNumber::from_log((1.0 - delta) * dg))
}

/// `t* = ln((1 + g)/(1 − g))`, `g = 1/p − 1/q`: below it the estimate fails on
/// maximal admissible balls and small annuli.
pub fn failure_threshold(p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    let g = 1.0 / p - 1.0 / q;
    Ok((2.0 * g / (1.0 - g)).ln_1p())
}

/// `2/(e^t+1) − 1 + (1/p − 1/q)`: growth rate of the implied constant in `|c_B|²`.
pub fn blowup_slope(p: f64, q: f64, t: TimeParam) -> Result<f64> {
    check_exponents(p, q)?;
    // 2/(e^t+1) − 1 = −tanh(t/2)
    Ok(1.0 / p - 1.0 / q - (0.5 * t.value()).tanh())
}

/// `−n(1+1/q) ln|c_B| + |c_B|² (2/(e^t+1) − 1 − 1/q)`, the lower bound for
/// `‖1_{C_k(B)} e^{tL} 1_B‖_q` up to its unstated `(k, n, t)` constant.
pub fn lemma_lower_bound_log(t: TimeParam, q: f64, n: usize, cb_norm: f64) -> Result<LogNumber> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::invalid("q", format!("must lie in (1, ∞), got {q}")));
    }
    if !(cb_norm >= 2.0 && cb_norm.is_finite()) {
        return Err(Error::invalid("cB_norm", format!("must be at least 2, got {cb_norm}")));
    }
    if n == 0 {
        return Err(Error::UnsupportedDimension(n));
    }
    let rate = -(0.5 * t.value()).tanh() - 1.0 / q;
    Ok(LogNumber::from_log(
        -(n as f64) * (1.0 + 1.0 / q) * cb_norm.ln() + cb_norm * cb_norm * rate,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(v: f64) -> TimeParam {
        TimeParam::new(v).unwrap()
    }

    #[test]
    fn davies_gaffney_examples() {
        let c1 = McIntoshConstant::default();
        let v = davies_gaffney_bound(t(1.0), 2.0, c1).unwrap();
        assert!((v - 0.5 * (-2f64).exp()).abs() < 1e-15);
        assert!((v - 0.067_667_641_618_306_35).abs() < 1e-15);
        assert!(davies_gaffney_bound(t(1.0), 0.0, c1).is_err());
        // bound(λ²t, λd) = λ·bound(t, d)
        let (lam, tv, d) = (3.0, 0.7, 1.3);
        let scaled = davies_gaffney_bound(t(lam * lam * tv), lam * d, c1).unwrap();
        assert!((scaled - lam * davies_gaffney_bound(t(tv), d, c1).unwrap()).abs() < 1e-14);
        let far: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
            .iter()
            .map(|&d| davies_gaffney_bound(t(0.5), d, c1).unwrap())
            .collect();
        assert!(far.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(davies_gaffney_bound(t(0.5), 1e3, c1).unwrap(), 0.0);
    }

    #[test]
    fn nelson_examples() {
        assert!((nelson_min_p(t(0.5)) - 1.367_879_441_171_442_3).abs() < 1e-15);
        assert_eq!(nelson_min_p(t(40.0)), 1.0);
        for p in [1.01f64, 1.3, 1.5, 1.99] {
            let tp = t(0.5 * (1.0 / (p - 1.0)).ln());
            assert!((nelson_min_p(tp) - p).abs() < 1e-14);
        }
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_exponent(2.0, t(0.8)).unwrap(), 0.0);
        // Independent evaluation with e^{-2} written out.
        let e2 = 0.135_335_283_236_612_7;
        let expected = (0.5 - 1.0 / 1.5) / (0.5 - 1.0 / (1.0 + e2));
        let got = delta_exponent(1.5, t(1.0)).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.4377).abs() < 1e-4);
        let near = delta_exponent(nelson_min_p(t(1.0)) + 1e-9, t(1.0)).unwrap();
        assert!(near < 1.0 && near > 0.999_999);
        assert!(delta_exponent(nelson_min_p(t(1.0)), t(1.0)).is_err());
        assert!(delta_exponent(2.01, t(1.0)).is_err());
    }

    #[test]
    fn interpolated_examples() {
        let c1 = McIntoshConstant::default();
        let dg = davies_gaffney_bound(t(1.0), 2.0, c1).unwrap();
        let at_two = interpolated_bound_log(2.0, t(1.0), 2.0, c1).unwrap();
        assert_eq!(
            at_two.log_magnitude(),
            davies_gaffney_bound_log(t(1.0), 2.0, c1).unwrap()
        );
        let v = interpolated_bound_log(1.5, t(1.0), 2.0, c1).unwrap();
        let delta = delta_exponent(1.5, t(1.0)).unwrap();
        assert!((v.log_magnitude() - (1.0 - delta) * dg.ln()).abs() < 1e-14);
        assert!((v.log_magnitude() - (1.0 - 0.4377) * 0.067_667_6f64.ln()).abs() < 1e-3);
        // Bound below one: larger p gives a smaller value.
        let vals: Vec<f64> = [1.2, 1.5, 1.8, 2.0]
            .iter()
            .map(|&p| interpolated_bound_log(p, t(1.0), 2.0, c1).unwrap().log_magnitude())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn threshold_examples() {
        assert!((failure_threshold(1.0, 2.0).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!(failure_threshold(1.5, 1.5 + 1e-9).unwrap() < 1e-8);
        assert!(failure_threshold(2.0, 2.0).is_err());
        assert!(failure_threshold(2.0, 1.0).is_err());
        assert!(failure_threshold(1.0, f64::INFINITY).is_err());
        assert!(failure_threshold(0.5, 2.0).is_err());
        // (p,q) = (1.5,2): ln(7/5)
        assert!((failure_threshold(1.5, 2.0).unwrap() - (7.0f64 / 5.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn slope_examples() {
        let s = blowup_slope(1.0, 2.0, t(0.5)).unwrap();
        assert!((s - (2.0 / (0.5f64.exp() + 1.0) - 0.5)).abs() < 1e-15);
        assert!((s - 0.25508).abs() < 1e-5);
        let ts = failure_threshold(1.2, 3.0).unwrap();
        assert!(blowup_slope(1.2, 3.0, t(ts)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn lemma_examples() {
        let v = lemma_lower_bound_log(t(0.5), 2.0, 1, 8.0).unwrap().log_magnitude();
        let expected = -1.5 * 8f64.ln() + 64.0 * (2.0 / (0.5f64.exp() + 1.0) - 1.5);
        assert!((v - expected).abs() < 1e-12);
        assert!((v - (-50.79)).abs() < 0.01);
        assert!(lemma_lower_bound_log(t(0.5), 2.0, 1, 1.5).is_err());
        assert!(lemma_lower_bound_log(t(0.5), 1.0, 1, 4.0).is_err());
        // Monotone in q.
        let qs = [1.5, 2.0, 4.0, 100.0];
        let vals: Vec<f64> = qs
            .iter()
            .map(|&q| lemma_lower_bound_log(t(0.5), q, 2, 6.0).unwrap().log_magnitude())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        // Differences split into quadratic and logarithmic parts.
        let (a, b, q, n) = (9.0f64, 5.0f64, 3.0, 2);
        let rate = 2.0 / (0.5f64.exp() + 1.0) - 1.0 - 1.0 / q;
        let diff = lemma_lower_bound_log(t(0.5), q, n, a).unwrap().log_magnitude()
            - lemma_lower_bound_log(t(0.5), q, n, b).unwrap().log_magnitude();
        let split = rate * (a * a - b * b) - n as f64 * (1.0 + 1.0 / q) * (a / b).ln();
        assert!((diff - split).abs() < 1e-12);
    }

    #[test]
    fn hypothesis_validation() {
        assert!(OffDiagHypothesis::new(1.0, 2.0, 0.0, 0.5).is_ok());
        assert!(OffDiagHypothesis::new(2.0, 2.0, 0.0, 0.5).is_err());
        assert!(OffDiagHypothesis::new(1.0, 2.0, -0.1, 0.5).is_err());
        assert!(OffDiagHypothesis::new(1.0, 2.0, 0.0, 0.0).is_err());
        assert!(McIntoshConstant::new(0.0).is_err());
    }

    fn admissible_triple() -> impl Strategy<Value = (f64, f64, f64)> {
        (1.0f64..8.0, 0.001f64..8.0, 0.001f64..5.0).prop_map(|(p, dq, t)| (p, p + dq, t))
    }

    proptest! {
        #[test]
        fn slope_sign_matches_threshold((p, q, tv) in admissible_triple()) {
            let slope = blowup_slope(p, q, t(tv)).unwrap();
            let ts = failure_threshold(p, q).unwrap();
            prop_assume!((ts - tv).abs() > 1e-12);
            prop_assert_eq!(slope > 0.0, ts > tv);
            // Same statement in the original form 2/(e^t+1) > 1 − (1/p − 1/q).
            prop_assert_eq!(2.0 / (tv.exp() + 1.0) > 1.0 - (1.0 / p - 1.0 / q), tv < ts);
        }

        #[test]
        fn delta_in_unit_interval(tv in 0.001f64..10.0, s in 0.0f64..1.0) {
            let p_min = nelson_min_p(t(tv));
            let p = 2.0 - s * (2.0 - p_min);
            prop_assume!(p > p_min);
            let d = delta_exponent(p, t(tv)).unwrap();
            prop_assert!((0.0..1.0).contains(&d));
        }

        #[test]
        fn threshold_increases_with_gap(p in 1.0f64..5.0, q1 in 0.01f64..5.0, dq in 0.01f64..5.0) {
            let a = failure_threshold(p, p + q1).unwrap();
            let b = failure_threshold(p, p + q1 + dq).unwrap();
            prop_assert!(b > a && a > 0.0);
        }
    }
}
