//! Numerical experiments on the testing family `E = B(c_B, |c_B|⁻¹)`, `F = C_k(B)`:
//! off-diagonal left sides, implied constants and their growth in `|c_B|²`,
//! hypercontractivity and Davies–Gaffney checks, and the `(p, q, t)` regime map.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::{self, OffDiagHypothesis};
use crate::geometry::{gamma_log, make_maximal_admissible_ball, set_distance, Ball, Point, MAX_DIM};
use crate::lognum::LogNumber;
use crate::mehler::{apply_via_translation_log, MehlerKernel, TimeParam};
use crate::quadrature::{self, Domain, QuadratureSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cb_norm: f64,
    pub log_lhs: f64,
    pub log_gamma_b: f64,
    pub log_implied_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log_implied_constant` against `cb_norm²`.
    pub fitted_slope: f64,
    pub predicted_slope: f64,
    /// `None` when the predicted slope is exactly zero.
    pub slope_rel_error: Option<f64>,
}

// ‖1_{C_k(B)} e^{tL} 1_B‖_{L^q(γ)} in log form, without testing-family checks.
fn annulus_lq_log(t: TimeParam, q: f64, ball: &Ball, k: u32, quad: &QuadratureSpec) -> Result<LogNumber> {
    let kernel = MehlerKernel::new(t);
    let source: Domain = ball.clone().into();
    let target: Domain = ball.annulus(k).into();
    quadrature::try_lq_norm_log(
        |y| quadrature::integrate_gamma_log(|x| LogNumber::from_log(kernel.log_eval(x, y)), &source, quad),
        &target,
        q,
        quad,
    )
}

fn check_testing_pair(ball: &Ball, k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("k", "testing annuli need k ≥ 1"));
    }
    if !ball.is_maximal_admissible() {
        return Err(Error::invalid(
            "ball",
            "must be maximal admissible, radius min(1, 1/|c_B|)",
        ));
    }
    let c = ball.center().norm();
    if c < 2f64.powi(k as i32) {
        return Err(Error::invalid(
            "cB_norm",
            format!("|c_B| = {c} is below 2^k = {}", 2f64.powi(k as i32)),
        ));
    }
    Ok(())
}

/// `ln (∫_{C_k(B)} |e^{tL} 1_B|^q dγ)^{1/q}` for a maximal admissible `B` with `|c_B| ≥ 2^k`.
pub fn offdiag_lhs_log(t: TimeParam, q: f64, ball: &Ball, k: u32, quad: &QuadratureSpec) -> Result<LogNumber> {
    check_testing_pair(ball, k)?;
    annulus_lq_log(t, q, ball, k, quad)
}

/// `ln[ LHS / (t^{−θ} exp(−c·dist(B, C_k(B))²/t) γ(B)^{1/p}) ]` with `f = 1_B`.
///
/// Bounded over the testing family iff the hypothesised estimate holds there.
pub fn implied_constant_log(
    hyp: &OffDiagHypothesis,
    t: TimeParam,
    ball: &Ball,
    k: u32,
    quad: &QuadratureSpec,
) -> Result<LogNumber> {
    Ok(LogNumber::from_log(
        implied_row(hyp, t, ball, k, quad)?.log_implied_constant,
    ))
}

fn implied_row(hyp: &OffDiagHypothesis, t: TimeParam, ball: &Ball, k: u32, quad: &QuadratureSpec) -> Result<SweepRow> {
    let lhs = offdiag_lhs_log(t, hyp.q, ball, k, quad)?.log_magnitude();
    let log_gamma_b = gamma_log(&ball.clone().into(), quad)?.log_magnitude();
    let dist = set_distance(ball, &ball.annulus(k))?;
    let tv = t.value();
    let rhs = -hyp.theta * tv.ln() - hyp.c * dist * dist / tv + log_gamma_b / hyp.p;
    Ok(SweepRow {
        cb_norm: ball.center().norm(),
        log_lhs: lhs,
        log_gamma_b,
        log_implied_constant: lhs - rhs,
    })
}

/// Least-squares line through `(x_i, y_i)`; returns `(slope, intercept)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::invalid("grid", "need at least two paired samples"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("grid", "abscissae are all equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Implied constants along `c_B = |c_B| e₁` for each grid value, with the fitted
/// and predicted growth rates in `|c_B|²`.
pub fn sweep_blowup(
    hyp: &OffDiagHypothesis,
    t: TimeParam,
    k: u32,
    n: usize,
    cb_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<SweepResult> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    if cb_grid.len() < 4 {
        return Err(Error::invalid(
            "grid",
            format!("need at least 4 points, got {}", cb_grid.len()),
        ));
    }
    let mut grid = cb_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let floor = 2f64.powi(k as i32);
    if let Some(bad) = grid.iter().find(|c| !(**c >= floor && c.is_finite())) {
        return Err(Error::invalid("grid", format!("|c_B| = {bad} is below 2^k = {floor}")));
    }
    if grid.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("grid", "values must be distinct"));
    }
    quad.validate()?;

    let outcomes: Vec<Result<SweepRow>> = grid
        .par_iter()
        .map(|&c| implied_row(hyp, t, &make_maximal_admissible_ball(Point::on_axis(n, c)), k, quad))
        .collect();
    let mut rows = Vec::with_capacity(outcomes.len());
    for (c, outcome) in grid.iter().zip(outcomes) {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => {
                return Err(Error::SweepAborted {
                    at: *c,
                    partial: rows,
                    source: Box::new(e),
                })
            }
        }
    }
    finish_sweep(rows, estimates::blowup_slope(hyp.p, hyp.q, t)?)
}

// Below this the predicted slope is a rounding residue of zero and a relative
// error carries no information.
const SLOPE_ZERO: f64 = 1e-12;

/// Fit the slope of already computed rows.
pub fn finish_sweep(rows: Vec<SweepRow>, predicted_slope: f64) -> Result<SweepResult> {
    let xs: Vec<f64> = rows.iter().map(|r| r.cb_norm * r.cb_norm).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.log_implied_constant).collect();
    let (fitted_slope, _) = fit_line(&xs, &ys)?;
    let slope_rel_error =
        (predicted_slope.abs() > SLOPE_ZERO).then(|| (fitted_slope - predicted_slope).abs() / predicted_slope.abs());
    Ok(SweepResult {
        rows,
        fitted_slope,
        predicted_slope,
        slope_rel_error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypercontractivityReport {
    pub ratio_closed_form: f64,
    pub ratio_numeric: f64,
}

/// `‖e^{tL} f_λ‖₂ / ‖f_λ‖_p` for `f_λ(x) = e^{λx}` in one dimension, in closed
/// form `exp(λ²(1 + e^{−2t} − p)/4)` and by nested quadrature.
pub fn hypercontractivity_check(
    t: TimeParam,
    p: f64,
    lambda: f64,
    quad: &QuadratureSpec,
) -> Result<HypercontractivityReport> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::invalid("p", format!("must lie in (1, 2], got {p}")));
    }
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda", "must be finite"));
    }
    let ratio_closed_form = (lambda * lambda * (estimates::nelson_min_p(t) - p) / 4.0).exp();

    let whole = Domain::whole(1);
    let f_norm = quadrature::lq_norm_log(|x| LogNumber::from_log(lambda * x[0]), &whole, p, quad)?;
    let semigroup_norm = quadrature::try_lq_norm_log(
        |x| {
            apply_via_translation_log(
                t,
                |z| LogNumber::from_log(lambda * z[0]),
                None,
                &Point::from(x[0]),
                quad,
            )
        },
        &whole,
        2.0,
        quad,
    )?;
    Ok(HypercontractivityReport {
        ratio_closed_form,
        ratio_numeric: (semigroup_norm / f_norm).to_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaviesGaffneyReport {
    /// `ln(‖1_{C_k(B)} e^{tL} 1_B‖₂ / ‖1_B‖₂)`.
    pub lhs_log: f64,
    /// `ln((t/d) e^{−d²/2t})`, i.e. the bound with constant 1.
    pub rhs_log_with_c1: f64,
}

impl DaviesGaffneyReport {
    pub fn log_ratio(&self) -> f64 {
        self.lhs_log - self.rhs_log_with_c1
    }
}

/// Both sides of the L²–L² Davies–Gaffney estimate for `E = B`, `F = C_k(B)`, `u = 1_B`.
pub fn davies_gaffney_check(t: TimeParam, ball: &Ball, k: u32, quad: &QuadratureSpec) -> Result<DaviesGaffneyReport> {
    if k == 0 {
        return Err(Error::invalid("k", "needs k ≥ 1 for a positive distance"));
    }
    let lhs = annulus_lq_log(t, 2.0, ball, k, quad)?.log_magnitude();
    let log_gamma_b = gamma_log(&ball.clone().into(), quad)?.log_magnitude();
    let d = set_distance(ball, &ball.annulus(k))?;
    Ok(DaviesGaffneyReport {
        lhs_log: lhs - 0.5 * log_gamma_b,
        rhs_log_with_c1: estimates::davies_gaffney_bound_log(t, d, Default::default())?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeClass {
    /// `t` below the failure threshold: the estimate fails on the testing family.
    FailsRestricted,
    /// `q = 2`, `p ∈ (1+e^{−2t}, 2]`: the interpolated estimate holds for all Borel sets.
    HoldsUnrestricted,
    /// `q ≠ 2` with `q − 1 < (p − 1)e^{2t}`; the L^p–L^q analogue of the positive
    /// result is plausible but unproven.
    ConjecturedExtension,
    Unknown,
}

impl RegimeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeClass::FailsRestricted => "fails_restricted",
            RegimeClass::HoldsUnrestricted => "holds_unrestricted",
            RegimeClass::ConjecturedExtension => "conjectured_extension",
            RegimeClass::Unknown => "unknown",
        }
    }
}

impl fmt::Display for RegimeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub t_star: f64,
    pub p_nelson: f64,
    pub class: RegimeClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegimeMap {
    pub cells: Vec<RegimeCell>,
    pub skipped: Vec<SkippedCell>,
}

/// Classify one `(p, q, t)`. The failure and positive predicates are evaluated independently;
/// if both fire the cell is rejected instead of arbitrated.
pub fn classify(p: f64, q: f64, t: f64) -> Result<RegimeCell> {
    let time = TimeParam::new(t)?;
    let t_star = estimates::failure_threshold(p, q)?;
    let p_nelson = estimates::nelson_min_p(time);
    let fails = t < t_star;
    let holds = q == 2.0 && p > p_nelson && p <= 2.0;
    let conjectured = q != 2.0 && p > 1.0 && q - 1.0 < (p - 1.0) * (2.0 * t).exp();
    if fails && (holds || conjectured) {
        return Err(Error::invalid(
            "cell",
            format!("({p}, {q}, {t}) satisfies both the failure and the positive condition"),
        ));
    }
    let class = if fails {
        RegimeClass::FailsRestricted
    } else if holds {
        RegimeClass::HoldsUnrestricted
    } else if conjectured {
        RegimeClass::ConjecturedExtension
    } else {
        RegimeClass::Unknown
    };
    Ok(RegimeCell {
        p,
        q,
        t,
        t_star,
        p_nelson,
        class,
    })
}

/// Classify every `(p, q, t)` of the grid, `p` slowest and `t` fastest.
pub fn regime_map(p_grid: &[f64], q_grid: &[f64], t_grid: &[f64]) -> RegimeMap {
    let mut map = RegimeMap::default();
    for &p in p_grid {
        for &q in q_grid {
            for &t in t_grid {
                match classify(p, q, t) {
                    Ok(cell) => map.cells.push(cell),
                    Err(e) => map.skipped.push(SkippedCell {
                        p,
                        q,
                        t,
                        reason: e.to_string(),
                    }),
                }
            }
        }
    }
    map
}
