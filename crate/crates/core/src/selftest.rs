//! The invariant suite behind `ou-offdiag selftest`. Randomised checks draw
//! from a ChaCha stream seeded by the caller.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cli;
use crate::estimates::{self, McIntoshConstant, OffDiagHypothesis};
use crate::experiments::{self, RegimeClass, SweepRow};
use crate::geometry::{gamma_log, make_maximal_admissible_ball, set_distance, Ball, Point, Region};
use crate::lognum::{log_sum_exp, LogNumber};
use crate::mehler::{self, MehlerKernel, TimeParam};
use crate::quadrature::{self, gauss_hermite, Domain, QuadratureSpec};
use crate::special::hermite;

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type CheckResult = std::result::Result<String, String>;
type Check = (&'static str, fn(&mut ChaCha8Rng) -> CheckResult);

fn lib<T>(r: crate::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn time(t: f64) -> TimeParam {
    TimeParam::new(t).expect("positive time")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Run every check. Each check gets its own stream derived from `seed`.
pub fn run(seed: u64) -> Vec<CheckOutcome> {
    let checks: [Check; 19] = [
        ("geometry.monotonicity", gamma_monotone),
        ("geometry.additivity", gamma_additive),
        ("geometry.erf_oracle", gamma_erf_oracle),
        ("geometry.distance_increasing", distance_increasing),
        ("mehler.symmetry", kernel_symmetry),
        ("mehler.conservation", kernel_conservation),
        ("mehler.semigroup", semigroup),
        ("mehler.oracle_agreement", oracle_agreement),
        ("mehler.eigenfunctions", eigenfunctions),
        ("quadrature.hermite_exactness", hermite_exactness),
        ("quadrature.log_sum_exp_extremes", log_sum_exp_extremes),
        ("quadrature.monotone_refinement", monotone_refinement),
        ("estimates.delta_range", delta_range),
        ("estimates.slope_threshold_sign", slope_threshold_sign),
        ("estimates.threshold_increasing", threshold_increasing),
        ("estimates.interpolation_at_p2", interpolation_at_p2),
        ("experiments.sweep_and_fit", sweep_and_fit),
        ("experiments.regime_partition", regime_partition),
        ("experiments.hypercontractivity", hypercontractivity),
    ];
    let mut out: Vec<CheckOutcome> = checks
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let result = check(&mut rng);
            CheckOutcome {
                name,
                passed: result.is_ok(),
                detail: result.unwrap_or_else(|e| e),
            }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(checks.len() as u64);
    let result = csv_round_trip(&mut rng);
    out.push(CheckOutcome {
        name: "cli.csv_round_trip",
        passed: result.is_ok(),
        detail: result.unwrap_or_else(|e| e),
    });
    out
}

fn gamma_monotone(rng: &mut ChaCha8Rng) -> CheckResult {
    let quad = QuadratureSpec::default();
    for n in 1..=3 {
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let center = lib(Point::new(c))?;
        let mut prev = f64::NEG_INFINITY;
        for r in [0.1, 0.3, 0.9, 2.0] {
            let v = lib(gamma_log(&Region::from(lib(Ball::new(center.clone(), r))?), &quad))?.log_magnitude();
            ensure(v >= prev, || format!("n={n} radius {r}: {v} < {prev}"))?;
            prev = v;
        }
    }
    Ok("nested balls, n = 1, 2, 3".into())
}

fn gamma_additive(rng: &mut ChaCha8Rng) -> CheckResult {
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let base = lib(Ball::new(lib(Point::new(c))?, 0.2))?;
        for k in 1..=4u32 {
            let outer = lib(gamma_log(&lib(base.dilate(2f64.powi(k as i32 + 1)))?.into(), &quad))?;
            let inner = lib(gamma_log(&lib(base.dilate(2f64.powi(k as i32)))?.into(), &quad))?;
            let ring = lib(gamma_log(&base.annulus(k).into(), &quad))?;
            let err = (inner + ring).rel_diff(&outer);
            worst = worst.max(err);
            ensure(err <= 2.0 * quad.tol, || {
                format!("n={n} k={k}: relative defect {err:e}")
            })?;
        }
    }
    Ok(format!("max relative defect {worst:.2e}"))
}

fn gamma_erf_oracle(rng: &mut ChaCha8Rng) -> CheckResult {
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let c = rng.gen_range(-2.0..2.0);
        let r = rng.gen_range(0.05..1.5);
        let (a, b) = (c - r, c + r);
        let oracle = ((libm::erf(b) - libm::erf(a)) / 2.0).ln();
        let got = lib(gamma_log(&lib(Ball::new(Point::from(c), r))?.into(), &quad))?.log_magnitude();
        let err = (got.exp() - oracle.exp()).abs() / oracle.exp();
        worst = worst.max(err);
        ensure(err <= 1e-10, || format!("[{a}, {b}]: relative error {err:e}"))?;
    }
    Ok(format!("50 intervals, max relative error {worst:.2e}"))
}

fn distance_increasing(rng: &mut ChaCha8Rng) -> CheckResult {
    for _ in 0..20 {
        let ball = make_maximal_admissible_ball(Point::from(rng.gen_range(-20.0..20.0)));
        let mut prev = 0.0;
        for k in 1..=8 {
            let d = lib(set_distance(&ball, &ball.annulus(k)))?;
            ensure(d > prev, || format!("k={k}: {d} ≤ {prev}"))?;
            prev = d;
        }
    }
    Ok("k = 1..8 on 20 balls".into())
}

fn kernel_symmetry(rng: &mut ChaCha8Rng) -> CheckResult {
    for _ in 0..1000 {
        let k = MehlerKernel::new(time(rng.gen_range(1e-6..20.0)));
        let n = rng.gen_range(1..=3);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-30.0..30.0)).collect();
        ensure(k.log_eval(&x, &y).to_bits() == k.log_eval(&y, &x).to_bits(), || {
            format!("asymmetric at {x:?}, {y:?}")
        })?;
    }
    Ok("1000 random pairs, bitwise".into())
}

fn kernel_conservation(rng: &mut ChaCha8Rng) -> CheckResult {
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for t in [0.1, 1.0, 5.0] {
        for n in 1..=2 {
            for _ in 0..3 {
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let len = crate::geometry::norm(&dir).max(1e-12);
                let radius = rng.gen_range(0.0..3.0);
                let x = lib(Point::new(dir.iter().map(|d| d / len * radius).collect()))?;
                let v = lib(mehler::apply_indicator_log(time(t), &Domain::whole(n), &x, &quad))?;
                let err = v.log_magnitude().exp_m1().abs();
                worst = worst.max(err);
                ensure(err <= 1e-8, || format!("t={t} x={x:?}: mass defect {err:e}"))?;
            }
        }
    }
    Ok(format!("max mass defect {worst:.2e}"))
}

fn semigroup(rng: &mut ChaCha8Rng) -> CheckResult {
    let quad = QuadratureSpec::with_tol(1e-10);
    let mut worst: f64 = 0.0;
    for t in [0.3, 1.0] {
        for s in [0.3, 1.0] {
            let (kt, ks) = (MehlerKernel::new(time(t)), MehlerKernel::new(time(s)));
            let x = Point::from(rng.gen_range(-2.0..2.0));
            let y = Point::from(rng.gen_range(-2.0..2.0));
            let composed = lib(quadrature::integrate_gamma_log(
                |z| LogNumber::from_log(kt.log_eval(x.coords(), z) + ks.log_eval(z, y.coords())),
                &Domain::Whole(mehler::transition_frame(time(t), &x)),
                &quad,
            ))?;
            let direct = lib(mehler::mehler_log(time(t + s), &x, &y))?;
            let err = composed.rel_diff(&direct);
            worst = worst.max(err);
            ensure(err <= 1e-6, || format!("t={t} s={s}: residual {err:e}"))?;
        }
    }
    Ok(format!("max composition residual {worst:.2e}"))
}

fn oracle_agreement(rng: &mut ChaCha8Rng) -> CheckResult {
    let quad = QuadratureSpec::with_tol(1e-11);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let t = time(rng.gen_range(0.1..3.0));
        let c = rng.gen_range(-2.0..2.0);
        let r = rng.gen_range(0.1..1.0);
        let y = rng.gen_range(-2.0..2.0);
        let region = Region::from(lib(Ball::new(Point::from(c), r))?);
        let kernel = lib(mehler::apply_indicator_log(
            t,
            &region.clone().into(),
            &Point::from(y),
            &quad,
        ))?;
        let translated = lib(mehler::apply_via_translation_log(
            t,
            |_| LogNumber::ONE,
            Some(&region),
            &Point::from(y),
            &quad,
        ))?;
        let closed = lib(mehler::apply_indicator_closed_form_log(t, &region, y))?;
        let err = kernel.rel_diff(&translated).max(kernel.rel_diff(&closed));
        worst = worst.max(err);
        ensure(err <= 1e-8, || {
            format!("t={} [{}, {}] y={y}: {err:e}", t.value(), c - r, c + r)
        })?;
    }
    Ok(format!("20 cases, max disagreement {worst:.2e}"))
}

fn eigenfunctions(rng: &mut ChaCha8Rng) -> CheckResult {
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for k in 0..=5 {
        for t in [0.3, 1.0] {
            for _ in 0..5 {
                let x = rng.gen_range(-2.5..2.5);
                let expected = (-(k as f64) * t).exp() * hermite(k, x);
                // Near a root the relative error is meaningless.
                if expected.abs() < 1e-3 {
                    continue;
                }
                let got = lib(mehler::apply_via_translation(
                    time(t),
                    |z| hermite(k, z[0]),
                    None,
                    &Point::from(x),
                    &quad,
                ))?;
                let err = (got - expected).abs() / expected.abs();
                worst = worst.max(err);
                ensure(err <= 1e-6, || format!("k={k} t={t} x={x}: {err:e}"))?;
            }
        }
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn hermite_exactness(_: &mut ChaCha8Rng) -> CheckResult {
    let rule = gauss_hermite(5);
    let sqrt_pi = std::f64::consts::PI.sqrt();
    for d in 0..=9u32 {
        let got: f64 = rule
            .nodes
            .iter()
            .zip(&rule.log_weights)
            .map(|(x, lw)| lw.exp() * x.powi(d as i32))
            .sum::<f64>()
            / sqrt_pi;
        // ∫ x^{2j} dγ = (2j−1)!!/2^j; odd moments vanish.
        let exact = if d % 2 == 1 {
            0.0
        } else {
            (1..=d / 2).map(|j| (2 * j - 1) as f64 / 2.0).product()
        };
        let err = (got - exact).abs() / exact.abs().max(1.0);
        ensure(err <= 1e-12, || format!("degree {d}: {got} vs {exact}"))?;
    }
    Ok("degrees 0..9 with 5 nodes".into())
}

fn log_sum_exp_extremes(rng: &mut ChaCha8Rng) -> CheckResult {
    for _ in 0..200 {
        let terms: Vec<f64> = (0..rng.gen_range(1..50))
            .map(|_| rng.gen_range(-1700.0..1700.0))
            .collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v = log_sum_exp(&terms);
        ensure(
            v.is_finite() && v >= max && v <= max + (terms.len() as f64).ln() + 1e-12,
            || format!("{v} outside [{max}, max + ln n]"),
        )?;
        let signed = terms
            .iter()
            .fold(LogNumber::ZERO, |acc, &l| acc + LogNumber::from_log(l));
        ensure((signed.log_magnitude() - v).abs() <= 1e-12 * v.abs().max(1.0), || {
            format!("signed sum {} vs {v}", signed.log_magnitude())
        })?;
    }
    Ok("200 batches in [−1700, 1700]".into())
}

fn monotone_refinement(rng: &mut ChaCha8Rng) -> CheckResult {
    let quad = QuadratureSpec {
        order: 2,
        tol: 1e-12,
        ..Default::default()
    };
    for _ in 0..10 {
        let t = time(rng.gen_range(0.2..2.0));
        let kernel = MehlerKernel::new(t);
        let y = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let ball = lib(Ball::new(
            lib(Point::new(vec![rng.gen_range(-2.0..2.0), 0.0]))?,
            rng.gen_range(0.2..1.0),
        ))?;
        let rep = lib(quadrature::integrate_gamma_log_report(
            |x| Ok(LogNumber::from_log(kernel.log_eval(x, &y))),
            &ball.into(),
            &quad,
        ))?;
        let e = &rep.error_estimates;
        ensure(e.windows(2).all(|w| w[1] <= w[0]), || format!("estimates {e:?}"))?;
    }
    Ok("10 Mehler integrands over discs".into())
}

fn delta_range(rng: &mut ChaCha8Rng) -> CheckResult {
    for _ in 0..10_000 {
        let t = time(rng.gen_range(1e-3..10.0));
        let lo = estimates::nelson_min_p(t);
        let p = rng.gen_range(lo..=2.0);
        if p <= lo {
            continue;
        }
        let d = lib(estimates::delta_exponent(p, t))?;
        ensure((0.0..1.0).contains(&d), || format!("δ({p}, {}) = {d}", t.value()))?;
    }
    Ok("10⁴ pairs".into())
}

fn slope_threshold_sign(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut compared = 0;
    for _ in 0..10_000 {
        let p = rng.gen_range(1.0..10.0);
        let q = p + rng.gen_range(1e-3..20.0);
        let t = rng.gen_range(1e-3..5.0);
        let slope = lib(estimates::blowup_slope(p, q, time(t)))?;
        let gap = lib(estimates::failure_threshold(p, q))? - t;
        // Both sides are rounding noise at the boundary.
        if gap.abs() < 1e-12 || slope.abs() < 1e-12 {
            continue;
        }
        compared += 1;
        ensure(slope.signum() == gap.signum(), || {
            format!("({p}, {q}, {t}): slope {slope}, t* − t = {gap}")
        })?;
    }
    Ok(format!("{compared} triples"))
}

fn threshold_increasing(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut gs: Vec<(f64, f64)> = Vec::new();
    for _ in 0..2000 {
        let p = rng.gen_range(1.0..10.0);
        let q = p + rng.gen_range(1e-3..50.0);
        gs.push((1.0 / p - 1.0 / q, lib(estimates::failure_threshold(p, q))?));
    }
    gs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in gs.windows(2) {
        if w[1].0 > w[0].0 {
            ensure(w[1].1 > w[0].1, || format!("gap {:?} → {:?}", w[0], w[1]))?;
        }
    }
    Ok("2000 pairs ordered by 1/p − 1/q".into())
}

fn interpolation_at_p2(rng: &mut ChaCha8Rng) -> CheckResult {
    for _ in 0..100 {
        let t = time(rng.gen_range(0.01..5.0));
        let d = rng.gen_range(0.01..10.0);
        let c = lib(McIntoshConstant::new(rng.gen_range(0.1..10.0)))?;
        let interp = lib(estimates::interpolated_bound_log(2.0, t, d, c))?.log_magnitude();
        let dg = lib(estimates::davies_gaffney_bound_log(t, d, c))?;
        ensure(interp == dg, || format!("{interp} ≠ {dg}"))?;
    }
    Ok("δ = 0 reproduces the Davies–Gaffney bound exactly".into())
}

fn sweep_and_fit(rng: &mut ChaCha8Rng) -> CheckResult {
    let a = rng.gen_range(-1.0..1.0);
    let b = rng.gen_range(-5.0..5.0);
    let xs: Vec<f64> = (0..7).map(|i| (4.0 + i as f64).powi(2)).collect();
    let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
    let (slope, _) = lib(experiments::fit_line(&xs, &ys))?;
    ensure((slope - a).abs() <= 1e-10 * a.abs().max(1.0), || {
        format!("slope {slope} vs {a}")
    })?;

    let hyp = lib(OffDiagHypothesis::with_defaults(1.0, 2.0))?;
    let grid = [4.0, 6.0, 8.0, 10.0, 12.0];
    let quad = QuadratureSpec::default();
    let first = lib(experiments::sweep_blowup(&hyp, time(0.5), 1, 1, &grid, &quad))?;
    let second = lib(experiments::sweep_blowup(&hyp, time(0.5), 1, 1, &grid, &quad))?;
    ensure(first == second, || "repeated sweep differs".into())?;
    let rel = first.slope_rel_error.unwrap_or(f64::INFINITY);
    ensure(rel <= 0.15, || {
        format!("fitted {} vs predicted {}", first.fitted_slope, first.predicted_slope)
    })?;
    Ok(format!(
        "synthetic fit exact, sweep deterministic, slope error {rel:.3}"
    ))
}

fn regime_partition(_: &mut ChaCha8Rng) -> CheckResult {
    let ps = lib(cli::linspace("p", 1.05, 1.95, 10))?;
    let ts = lib(cli::linspace("t", 0.1, 2.0, 20))?;
    let map = experiments::regime_map(&ps, &[1.5, 2.0, 4.0], &ts);
    for cell in &map.cells {
        let fails = cell.t < cell.t_star;
        ensure(fails == (cell.class == RegimeClass::FailsRestricted), || {
            format!("{cell:?}")
        })?;
        if cell.class == RegimeClass::HoldsUnrestricted {
            ensure(cell.q == 2.0 && cell.p > cell.p_nelson && cell.p <= 2.0, || {
                format!("{cell:?}")
            })?;
        }
    }
    let probe = lib(experiments::classify(1.05, 2.0, 1.2))?;
    ensure(probe.class == RegimeClass::Unknown, || format!("{probe:?}"))?;
    Ok(format!(
        "{} cells classified, {} skipped",
        map.cells.len(),
        map.skipped.len()
    ))
}

fn hypercontractivity(_: &mut ChaCha8Rng) -> CheckResult {
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for lambda in [0.5, 1.0, 2.0] {
        for t in [0.3, 1.0] {
            for p in [1.2, 1.5, 2.0] {
                let rep = lib(experiments::hypercontractivity_check(time(t), p, lambda, &quad))?;
                let err = (rep.ratio_numeric - rep.ratio_closed_form).abs() / rep.ratio_closed_form;
                worst = worst.max(err);
                ensure(err <= 1e-6, || format!("λ={lambda} t={t} p={p}: {err:e}"))?;
            }
        }
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn csv_round_trip(rng: &mut ChaCha8Rng) -> CheckResult {
    let rows: Vec<SweepRow> = (0..50)
        .map(|_| SweepRow {
            cb_norm: rng.gen_range(2.0..100.0),
            log_lhs: rng.gen_range(-1e4..1e4),
            log_gamma_b: rng.gen_range(-1e4..0.0),
            log_implied_constant: rng.gen::<f64>() * 10f64.powi(rng.gen_range(-300..300)),
        })
        .collect();
    let parsed = lib(cli::parse_sweep_csv(&cli::rows_to_csv(&rows)))?;
    ensure(parsed == rows, || "sweep rows changed on round trip".into())?;
    let ps = lib(cli::linspace("p", 1.05, 1.95, 10))?;
    let ts = lib(cli::linspace("t", 0.1, 2.0, 20))?;
    let map = experiments::regime_map(&ps, &[2.0], &ts);
    let cells = lib(cli::parse_regime_csv(&cli::regime_to_csv(&map)))?;
    ensure(cells == map.cells, || "regime cells changed on round trip".into())?;
    Ok("50 random sweep rows and a 200-cell regime map".into())
}
