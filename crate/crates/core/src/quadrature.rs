//! Log-domain integration against the Gaussian measure.
//!
//! Every rule here produces `ln ∫ e^{f(x)} dγ(x)` by summing
//! `ln w_i + f(x_i) + ln(density · jacobian)` through a streaming
//! log-sum-exp, so integrands of size `exp(±1700)` are fine. Orders double
//! until two successive values agree to `tol` relative to `∫|f| dγ`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm_sq, Annulus, Ball, Point, Region, MAX_DIM};
use crate::lognum::{LogNumber, SignedLogSum};

/// Largest one-dimensional rule the engine will build.
pub const MAX_RULE_ORDER: usize = 2048;
/// Largest number of integrand evaluations in a single pass.
pub const MAX_PASS_NODES: usize = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    GaussHermite,
    GaussLegendre,
    PolarProduct,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::GaussHermite => "gauss_hermite",
            Scheme::GaussLegendre => "gauss_legendre",
            Scheme::PolarProduct => "polar_product",
        }
    }
}

/// Integration settings.
///
/// Whole-space domains always use Gauss–Hermite. On bounded regions
/// `GaussLegendre` integrates the one-dimensional intervals directly, and
/// `PolarProduct` (also used when `GaussHermite` is requested) places a radial
/// Gauss–Legendre rule about the region's center times an angular rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub order: usize,
    pub tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            scheme: Scheme::PolarProduct,
            order: 8,
            tol: 1e-8,
            max_refinements: 12,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureSpec { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::invalid("tol", format!("must lie in (0, 1), got {}", self.tol)));
        }
        if self.order < 2 {
            return Err(Error::invalid(
                "order",
                format!("must be at least 2, got {}", self.order),
            ));
        }
        if self.max_refinements == 0 {
            return Err(Error::invalid("max_refinements", "must be positive"));
        }
        Ok(())
    }
}

/// Affine frame `x = center + scale · u` for whole-space integrals.
///
/// Placing the frame on the bulk of a concentrated integrand keeps the
/// Gauss–Hermite nodes where the mass is.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFrame {
    pub center: Point,
    pub scale: f64,
}

impl GaussianFrame {
    pub fn standard(dim: usize) -> Self {
        GaussianFrame {
            center: Point::origin(dim),
            scale: 1.0,
        }
    }

    pub fn new(center: Point, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid("scale", format!("must be positive, got {scale}")));
        }
        Ok(GaussianFrame { center, scale })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Region(Region),
    Whole(GaussianFrame),
}

impl Domain {
    pub fn whole(dim: usize) -> Self {
        Domain::Whole(GaussianFrame::standard(dim))
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Region(r) => r.dim(),
            Domain::Whole(f) => f.center.dim(),
        }
    }
}

impl From<Region> for Domain {
    fn from(r: Region) -> Self {
        Domain::Region(r)
    }
}

impl From<Ball> for Domain {
    fn from(b: Ball) -> Self {
        Domain::Region(Region::Ball(b))
    }
}

impl From<Annulus> for Domain {
    fn from(a: Annulus) -> Self {
        Domain::Region(Region::Annulus(a))
    }
}

/// Nodes and natural-log weights of a one-dimensional rule.
#[derive(Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum RuleKind {
    Legendre,
    Hermite,
}

type RuleCache = RwLock<HashMap<(RuleKind, usize), Arc<Rule>>>;

fn cached(kind: RuleKind, order: usize) -> Arc<Rule> {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(rule) = cache.read().unwrap().get(&(kind, order)) {
        return rule.clone();
    }
    let rule = Arc::new(match kind {
        RuleKind::Legendre => build_gauss_legendre(order),
        RuleKind::Hermite => build_gauss_hermite(order),
    });
    cache.write().unwrap().entry((kind, order)).or_insert(rule).clone()
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> Arc<Rule> {
    cached(RuleKind::Legendre, order)
}

/// Gauss–Hermite rule for the weight `e^{-x²}` on the real line.
pub fn gauss_hermite(order: usize) -> Arc<Rule> {
    cached(RuleKind::Hermite, order)
}

fn build_gauss_legendre(m: usize) -> Rule {
    let mut nodes = vec![0.0; m];
    let mut log_weights = vec![0.0; m];
    let eval = |z: f64| {
        let (mut p1, mut p2) = (1.0, 0.0);
        for j in 1..=m {
            let p3 = p2;
            p2 = p1;
            p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
        }
        let dp = m as f64 * (z * p1 - p2) / (z * z - 1.0);
        (p1, dp)
    };
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = eval(z);
            let step = p / dp;
            z -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        let (_, dp) = eval(z);
        let lw = (2.0 / ((1.0 - z * z) * dp * dp)).ln();
        nodes[i] = -z;
        nodes[m - 1 - i] = z;
        log_weights[i] = lw;
        log_weights[m - 1 - i] = lw;
    }
    Rule { nodes, log_weights }
}

// Orthonormal Hermite recurrence at z. Returns (p_m, p_{m-1}) both scaled by
// exp(-log_scale) so that large orders do not overflow.
fn orthonormal_hermite(m: usize, z: f64) -> (f64, f64, f64) {
    const RESCALE: f64 = 1e200;
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 1..=m {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > RESCALE {
            p1 /= RESCALE;
            p2 /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    (p1, p2, log_scale)
}

// Number of eigenvalues below `x` of the Jacobi matrix of the Hermite weight
// (zero diagonal, off-diagonal sqrt(j/2)), by Sturm sequence.
fn jacobi_count_below(m: usize, x: f64) -> usize {
    let mut count = 0;
    let mut d = -x;
    if d < 0.0 {
        count += 1;
    }
    for j in 1..m {
        let prev = if d == 0.0 { f64::MIN_POSITIVE } else { d };
        d = -x - (j as f64 / 2.0) / prev;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

// Roots are bracketed by Sturm bisection, then polished by Newton on the
// orthonormal recurrence, which also yields the log weights.
fn build_gauss_hermite(m: usize) -> Rule {
    let mut nodes = vec![0.0; m];
    let mut log_weights = vec![0.0; m];
    let n = m as f64;
    let upper = (2.0 * n + 1.0).sqrt() + 1.0;
    for i in m / 2..m {
        let (mut lo, mut hi) = (-upper, upper);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if jacobi_count_below(m, mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-10 {
                break;
            }
        }
        let mut z = 0.5 * (lo + hi);
        for _ in 0..4 {
            let (p1, p2, _) = orthonormal_hermite(m, z);
            let step = p1 / ((2.0 * n).sqrt() * p2);
            if !step.is_finite() || step.abs() > hi - lo {
                break;
            }
            z -= step;
        }
        if m % 2 == 1 && i == m / 2 {
            z = 0.0;
        }
        let (_, p2, log_scale) = orthonormal_hermite(m, z);
        let log_dp = ((2.0 * n).sqrt() * p2).abs().ln() + log_scale;
        let lw = std::f64::consts::LN_2 - 2.0 * log_dp;
        nodes[i] = z;
        nodes[m - 1 - i] = -z;
        log_weights[i] = lw;
        log_weights[m - 1 - i] = lw;
    }
    Rule { nodes, log_weights }
}

/// Outcome of a refinement run.
#[derive(Clone, Debug)]
pub struct QuadReport {
    pub value: LogNumber,
    /// `∫ |e^f| dγ` at the final order.
    pub magnitude: LogNumber,
    pub order: usize,
    /// Successive iterates, coarsest first.
    pub iterates: Vec<LogNumber>,
    /// Relative change between consecutive iterates.
    pub error_estimates: Vec<f64>,
}

/// `ln ∫_domain e^{f(x)} dγ(x)` for an integrand given in log form.
pub fn integrate_gamma_log<F>(f: F, domain: &Domain, spec: &QuadratureSpec) -> Result<LogNumber>
where
    F: Fn(&[f64]) -> LogNumber,
{
    integrate_gamma_log_report(|x| Ok(f(x)), domain, spec).map(|r| r.value)
}

/// As [`integrate_gamma_log`] for integrands that can fail (nested integrals).
pub fn try_integrate_gamma_log<F>(f: F, domain: &Domain, spec: &QuadratureSpec) -> Result<LogNumber>
where
    F: Fn(&[f64]) -> Result<LogNumber>,
{
    integrate_gamma_log_report(f, domain, spec).map(|r| r.value)
}

pub fn integrate_gamma_log_report<F>(f: F, domain: &Domain, spec: &QuadratureSpec) -> Result<QuadReport>
where
    F: Fn(&[f64]) -> Result<LogNumber>,
{
    spec.validate()?;
    let dim = domain.dim();
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::UnsupportedDimension(dim));
    }
    if let (Domain::Region(r), Scheme::GaussLegendre) = (domain, spec.scheme) {
        if r.dim() != 1 {
            return Err(Error::UnsupportedScheme {
                scheme: spec.scheme.name(),
                domain: format!("a region in dimension {}", r.dim()),
            });
        }
    }

    let log_tol = spec.tol.ln();
    let mut iterates = Vec::new();
    let mut error_estimates = Vec::new();
    let mut order = spec.order;
    for step in 0..=spec.max_refinements {
        if order > MAX_RULE_ORDER || pass_size(domain, spec.scheme, order) > MAX_PASS_NODES {
            break;
        }
        let sum = single_pass(&f, domain, spec.scheme, order)?;
        let value = sum.value();
        let magnitude = sum.magnitude();
        if let Some(prev) = iterates.last().copied() {
            let diff: LogNumber = value - prev;
            let rel = if magnitude.is_zero() {
                if diff.is_zero() {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (diff.log_magnitude() - magnitude.log_magnitude()).exp()
            };
            error_estimates.push(rel);
            iterates.push(value);
            if magnitude.is_zero() || diff.log_magnitude() - magnitude.log_magnitude() <= log_tol {
                return Ok(QuadReport {
                    value,
                    magnitude,
                    order,
                    iterates,
                    error_estimates,
                });
            }
        } else {
            iterates.push(value);
        }
        if step < spec.max_refinements {
            order *= 2;
        }
    }
    let n = iterates.len();
    Err(Error::NotConverged {
        refinements: n.saturating_sub(1),
        order,
        previous: iterates.get(n.wrapping_sub(2)).map_or(f64::NAN, |v| v.log_magnitude()),
        last: iterates.last().map_or(f64::NAN, |v| v.log_magnitude()),
    })
}

fn pass_size(domain: &Domain, scheme: Scheme, order: usize) -> usize {
    let n = domain.dim() as u32;
    match domain {
        Domain::Whole(_) => order.saturating_pow(n),
        Domain::Region(_) if n == 1 && scheme == Scheme::GaussLegendre => 2 * order,
        Domain::Region(_) => match n {
            1 => 2 * order,
            2 => 2 * order * order,
            _ => 2 * order.saturating_pow(3),
        },
    }
}

fn single_pass<F>(f: &F, domain: &Domain, scheme: Scheme, order: usize) -> Result<SignedLogSum>
where
    F: Fn(&[f64]) -> Result<LogNumber>,
{
    match domain {
        Domain::Whole(frame) => whole_space_pass(f, frame, order),
        Domain::Region(region) if scheme == Scheme::GaussLegendre => interval_pass(f, region, order),
        Domain::Region(region) => polar_pass(f, region, order),
    }
}

fn log_density_norm(dim: usize) -> f64 {
    -0.5 * dim as f64 * PI.ln()
}

fn whole_space_pass<F>(f: &F, frame: &GaussianFrame, order: usize) -> Result<SignedLogSum>
where
    F: Fn(&[f64]) -> Result<LogNumber>,
{
    let dim = frame.center.dim();
    let rule = gauss_hermite(order);
    let center = frame.center.coords();
    let s = frame.scale;
    let constant = log_density_norm(dim) + dim as f64 * s.ln();
    let mut acc = SignedLogSum::default();
    let mut idx = vec![0usize; dim];
    let mut u = [0.0; MAX_DIM];
    let mut x = [0.0; MAX_DIM];
    loop {
        let mut lw = constant;
        for d in 0..dim {
            u[d] = rule.nodes[idx[d]];
            x[d] = center[d] + s * u[d];
            lw += rule.log_weights[idx[d]];
        }
        // dγ(x) = e^{|u|² − |x|²} sⁿ · (π^{-n/2} e^{-|u|²} du)
        let shift = norm_sq(&u[..dim]) - norm_sq(&x[..dim]);
        let fx = f(&x[..dim])?;
        acc.push(fx * LogNumber::from_log(lw + shift));
        if !advance(&mut idx, order) {
            break;
        }
    }
    Ok(acc)
}

fn advance(idx: &mut [usize], order: usize) -> bool {
    for i in idx.iter_mut() {
        *i += 1;
        if *i < order {
            return true;
        }
        *i = 0;
    }
    false
}

fn interval_pass<F>(f: &F, region: &Region, order: usize) -> Result<SignedLogSum>
where
    F: Fn(&[f64]) -> Result<LogNumber>,
{
    let rule = gauss_legendre(order);
    let mut acc = SignedLogSum::default();
    for (a, b) in region.intervals() {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let base = half.ln() + log_density_norm(1);
        for (xi, lw) in rule.nodes.iter().zip(&rule.log_weights) {
            let x = mid + half * xi;
            let fx = f(&[x])?;
            acc.push(fx * LogNumber::from_log(base + lw - x * x));
        }
    }
    Ok(acc)
}

/// Directions on the unit sphere with log weights summing to the sphere's area.
fn sphere_rule(dim: usize, order: usize) -> Vec<([f64; MAX_DIM], f64)> {
    match dim {
        1 => vec![([-1.0, 0.0, 0.0], 0.0), ([1.0, 0.0, 0.0], 0.0)],
        2 => {
            let count = 2 * order;
            let lw = (2.0 * PI / count as f64).ln();
            (0..count)
                .map(|j| {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / count as f64;
                    ([phi.cos(), phi.sin(), 0.0], lw)
                })
                .collect()
        }
        _ => {
            let polar = gauss_legendre(order);
            let count = 2 * order;
            let lw_az = (2.0 * PI / count as f64).ln();
            let mut out = Vec::with_capacity(order * count);
            for (z, lwz) in polar.nodes.iter().zip(&polar.log_weights) {
                let rho = (1.0 - z * z).sqrt();
                for j in 0..count {
                    let psi = 2.0 * PI * (j as f64 + 0.5) / count as f64;
                    out.push(([rho * psi.cos(), rho * psi.sin(), *z], lwz + lw_az));
                }
            }
            out
        }
    }
}

fn polar_pass<F>(f: &F, region: &Region, order: usize) -> Result<SignedLogSum>
where
    F: Fn(&[f64]) -> Result<LogNumber>,
{
    let dim = region.dim();
    let center = region.center().coords();
    let (r0, r1) = region.radial_range();
    let radial = gauss_legendre(order);
    let directions = sphere_rule(dim, order);
    let half = 0.5 * (r1 - r0);
    let mid = 0.5 * (r0 + r1);
    let base = half.ln() + log_density_norm(dim);
    let mut acc = SignedLogSum::default();
    let mut x = [0.0; MAX_DIM];
    for (xi, lwr) in radial.nodes.iter().zip(&radial.log_weights) {
        let r = mid + half * xi;
        let radial_lw = base + lwr + (dim as f64 - 1.0) * r.ln();
        for (omega, lwo) in &directions {
            for d in 0..dim {
                x[d] = center[d] + r * omega[d];
            }
            let fx = f(&x[..dim])?;
            acc.push(fx * LogNumber::from_log(radial_lw + lwo - norm_sq(&x[..dim])));
        }
    }
    Ok(acc)
}

/// `ln (∫_domain |e^{g}|^q dγ)^{1/q}`.
pub fn lq_norm_log<G>(g: G, domain: &Domain, q: f64, spec: &QuadratureSpec) -> Result<LogNumber>
where
    G: Fn(&[f64]) -> LogNumber,
{
    try_lq_norm_log(|x| Ok(g(x)), domain, q, spec)
}

pub fn try_lq_norm_log<G>(g: G, domain: &Domain, q: f64, spec: &QuadratureSpec) -> Result<LogNumber>
where
    G: Fn(&[f64]) -> Result<LogNumber>,
{
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::invalid("q", format!("must be finite and at least 1, got {q}")));
    }
    let integral = try_integrate_gamma_log(|x| Ok(g(x)?.abs().powf(q)), domain, spec)?;
    Ok(integral.powf(1.0 / q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_maximal_admissible_ball;
    use crate::special::log_gamma_interval;

    #[test]
    fn legendre_weights_and_exactness() {
        for m in [2, 5, 16, 101, 1024] {
            let rule = gauss_legendre(m);
            let total: f64 = rule.log_weights.iter().map(|l| l.exp()).sum();
            assert!((total - 2.0).abs() < 1e-13, "m={m}");
            // ∫ x^{2m-2} over [-1,1] = 2/(2m-1)
            let deg = (2 * m - 2).min(40) as i32;
            let s: f64 = rule
                .nodes
                .iter()
                .zip(&rule.log_weights)
                .map(|(x, l)| l.exp() * x.powi(deg))
                .sum();
            assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn hermite_weights_sum_to_sqrt_pi() {
        for m in [1, 2, 7, 64, 300, 1500] {
            let rule = gauss_hermite(m);
            let total = crate::lognum::log_sum_exp(&rule.log_weights);
            assert!((total - 0.5 * PI.ln()).abs() < 1e-12, "m={m}: {total}");
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]), "m={m} unsorted");
        }
    }

    #[test]
    fn hermite_exact_for_low_degree_monomials() {
        // ∫ x^{2j} dγ = (2j-1)!!/2^j, odd moments vanish; five nodes integrate degree ≤ 9.
        let whole = Domain::whole(1);
        let spec = QuadratureSpec {
            order: 5,
            ..Default::default()
        };
        let rule = gauss_hermite(5);
        for deg in 0..=9 {
            let s: f64 = rule
                .nodes
                .iter()
                .zip(&rule.log_weights)
                .map(|(x, l)| l.exp() * x.powi(deg))
                .sum::<f64>()
                / PI.sqrt();
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                let j = deg / 2;
                (1..=j).map(|i| (2 * i - 1) as f64).product::<f64>() / 2f64.powi(j)
            };
            assert!((s - exact).abs() <= 1e-12 * exact.max(1.0), "deg {deg}: {s} vs {exact}");
        }
        let second = integrate_gamma_log(|x| LogNumber::from_f64(x[0] * x[0]), &whole, &spec).unwrap();
        assert!((second.log_magnitude() - 0.5f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn full_space_constant_is_one() {
        for n in 1..=3 {
            let v = integrate_gamma_log(|_| LogNumber::ONE, &Domain::whole(n), &Default::default()).unwrap();
            assert!(v.log_magnitude().abs() < 1e-13);
        }
    }

    #[test]
    fn frame_change_preserves_integral() {
        // ∫ x₀² dγ = 1/2 in any frame.
        let frame = GaussianFrame::new(Point::new(vec![0.4, -0.2]).unwrap(), 0.8).unwrap();
        let spec = QuadratureSpec::with_tol(1e-12);
        let v = integrate_gamma_log(|x| LogNumber::from_f64(x[0] * x[0]), &Domain::Whole(frame), &spec).unwrap();
        assert!((v.to_f64() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn unit_interval_half_mass() {
        let b = crate::geometry::Ball::new(Point::from(0.5), 0.5).unwrap();
        for scheme in [Scheme::GaussLegendre, Scheme::PolarProduct] {
            let spec = QuadratureSpec {
                scheme,
                tol: 1e-12,
                ..Default::default()
            };
            let v = integrate_gamma_log(|_| LogNumber::ONE, &b.clone().into(), &spec).unwrap();
            let expected = (libm::erf(1.0) / 2.0).ln();
            assert!((v.log_magnitude() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn legendre_rejects_planar_regions() {
        let b = crate::geometry::Ball::new(Point::origin(2), 1.0).unwrap();
        let spec = QuadratureSpec {
            scheme: Scheme::GaussLegendre,
            ..Default::default()
        };
        assert!(matches!(
            integrate_gamma_log(|_| LogNumber::ONE, &b.into(), &spec),
            Err(Error::UnsupportedScheme { .. })
        ));
    }

    #[test]
    fn exhaustion_reports_iterates() {
        // A kink off the node set keeps the rule from settling at 1e-14.
        let spec = QuadratureSpec {
            tol: 1e-14,
            max_refinements: 3,
            ..Default::default()
        };
        let err = integrate_gamma_log(
            |x| LogNumber::from_f64((x[0] - 0.3).abs().sqrt()),
            &Domain::whole(1),
            &spec,
        )
        .unwrap_err();
        match err {
            Error::NotConverged {
                refinements,
                previous,
                last,
                ..
            } => {
                assert_eq!(refinements, 3);
                assert!(previous.is_finite() && last.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_specs() {
        for spec in [
            QuadratureSpec {
                tol: 0.0,
                ..Default::default()
            },
            QuadratureSpec {
                tol: 1.0,
                ..Default::default()
            },
            QuadratureSpec {
                order: 1,
                ..Default::default()
            },
        ] {
            assert!(spec.validate().is_err());
        }
    }

    #[test]
    fn lq_norm_of_constant() {
        let b = make_maximal_admissible_ball(Point::from(3.0));
        let spec = QuadratureSpec::with_tol(1e-12);
        let f: Domain = b.annulus(1).into();
        let c = 2.5f64;
        for q in [1.0, 2.0, 3.7] {
            let v = lq_norm_log(|_| LogNumber::from_f64(c), &f, q, &spec).unwrap();
            let gamma_f = crate::geometry::gamma_log(&b.annulus(1).into(), &spec).unwrap();
            let expected = c.ln() + gamma_f.log_magnitude() / q;
            assert!((v.log_magnitude() - expected).abs() < 1e-10);
        }
        assert!(lq_norm_log(|_| LogNumber::ONE, &f, 0.5, &spec).is_err());
        assert!(lq_norm_log(|_| LogNumber::ONE, &f, f64::INFINITY, &spec).is_err());
    }

    #[test]
    fn lq_norm_monotone_in_domain() {
        let b = make_maximal_admissible_ball(Point::from(1.5));
        let spec = QuadratureSpec::default();
        let g = |x: &[f64]| LogNumber::from_f64(1.0 + x[0] * x[0]);
        let small = lq_norm_log(g, &b.clone().into(), 2.0, &spec).unwrap();
        let large = lq_norm_log(g, &b.dilate(2.0).unwrap().into(), 2.0, &spec).unwrap();
        assert!(small.log_magnitude() < large.log_magnitude());
    }

    #[test]
    fn interval_integral_of_zero_log() {
        // f ≡ 0 in log space means the integrand is 1; over [0, 1] that is erf(1)/2.
        let b = crate::geometry::Ball::new(Point::from(0.5), 0.5).unwrap();
        let v = integrate_gamma_log(|_| LogNumber::ONE, &b.into(), &QuadratureSpec::with_tol(1e-12)).unwrap();
        assert!((v.log_magnitude() - log_gamma_interval(0.0, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn error_estimates_decrease_on_smooth_integrands() {
        let b = make_maximal_admissible_ball(Point::on_axis(2, 4.0));
        let y = [4.3, 0.1];
        let spec = QuadratureSpec {
            order: 2,
            tol: 1e-13,
            ..Default::default()
        };
        let report = integrate_gamma_log_report(
            |x| {
                Ok(LogNumber::from_log(
                    -(x[0] - y[0]).powi(2) - (x[1] - y[1]).powi(2) + 2.0 * x[0] * y[0] / 3.0,
                ))
            },
            &b.into(),
            &spec,
        )
        .unwrap();
        assert!(report.error_estimates.len() >= 3);
        assert!(
            report.error_estimates.windows(2).all(|w| w[1] <= w[0]),
            "{:?}",
            report.error_estimates
        );
    }

    #[test]
    fn extreme_log_integrands_do_not_overflow() {
        let b = make_maximal_admissible_ball(Point::from(30.0));
        let v = integrate_gamma_log(|_| LogNumber::from_log(1700.0), &b.into(), &Default::default()).unwrap();
        assert!(v.is_finite());
        assert!(v.log_magnitude() > 1700.0 - 910.0 && v.log_magnitude() < 1700.0 - 890.0);
    }
}
