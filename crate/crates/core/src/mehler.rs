//! The Mehler kernel of the Ornstein–Uhlenbeck semigroup `e^{tL}`, `L = ½Δ − x·∇`,
//! and two independent ways of applying the semigroup.
//!
//! ```text
//! M_t(x,y) = (1−e^{−2t})^{−n/2} exp(−e^{−2t}|x−y|²/(1−e^{−2t})) exp(2e^{−t}⟨x,y⟩/(1+e^{−t}))
//! e^{tL}u(x) = ∫ M_t(x,y) u(y) dγ(y)
//!            = ∫ u(e^{−t}x + √(1−e^{−2t}) v) dγ(v)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annulus, Ball, Point, Region, MAX_DIM};
use crate::lognum::LogNumber;
use crate::quadrature::{self, Domain, GaussianFrame, QuadratureSpec};
use crate::special::log_gamma_interval;

/// Semigroup time `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TimeParam(f64);

impl TimeParam {
    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(TimeParam(t))
        } else {
            Err(Error::invalid("t", format!("must be positive and finite, got {t}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `e^{−t}`.
    pub fn decay(self) -> f64 {
        (-self.0).exp()
    }

    /// `1 − e^{−2t}`, accurate for tiny `t`.
    pub fn variance(self) -> f64 {
        -(-2.0 * self.0).exp_m1()
    }

    /// `ln(1 − e^{−2t})` accurate at both ends.
    pub fn log_variance(self) -> f64 {
        if self.0 < 0.35 {
            self.variance().ln()
        } else {
            (-(-2.0 * self.0).exp()).ln_1p()
        }
    }
}

/// Time-dependent constants of `M_t`, computed once per time.
#[derive(Clone, Copy, Debug)]
pub struct MehlerKernel {
    // e^{−2t}/(1−e^{−2t}) = 1/(e^{2t} − 1)
    spread: f64,
    // 2e^{−t}/(1+e^{−t}) = 2/(e^t + 1)
    coupling: f64,
    // −½ ln(1−e^{−2t})
    log_norm_per_dim: f64,
}

impl MehlerKernel {
    pub fn new(t: TimeParam) -> Self {
        let t = t.value();
        MehlerKernel {
            spread: 1.0 / (2.0 * t).exp_m1(),
            coupling: 2.0 / (t.exp() + 1.0),
            log_norm_per_dim: -0.5 * TimeParam(t).log_variance(),
        }
    }

    /// `ln M_t(x, y)`; symmetric in `x`, `y` bit for bit.
    pub fn log_eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut dist_sq = 0.0;
        let mut inner = 0.0;
        for (a, b) in x.iter().zip(y) {
            let d = a - b;
            dist_sq += d * d;
            inner += a * b;
        }
        x.len() as f64 * self.log_norm_per_dim - self.spread * dist_sq + self.coupling * inner
    }
}

/// `ln M_t(x, y)` as a positive [`LogNumber`].
pub fn mehler_log(t: TimeParam, x: &Point, y: &Point) -> Result<LogNumber> {
    y.check_dim(x.dim())?;
    Ok(LogNumber::from_log(
        MehlerKernel::new(t).log_eval(x.coords(), y.coords()),
    ))
}

/// The law of `e^{−t}y + √(1−e^{−2t}) v`, `v ~ γ`, as an integration frame.
///
/// `M_t(y, ·) dγ` is exactly the Gaussian with this center and scale.
pub fn transition_frame(t: TimeParam, y: &Point) -> GaussianFrame {
    let decay = t.decay();
    let center = Point::new(y.coords().iter().map(|c| decay * c).collect()).expect("scaled finite coordinates");
    GaussianFrame {
        center,
        scale: t.variance().sqrt(),
    }
}

/// `ln e^{tL} 1_E (y) = ln ∫_E M_t(x, y) dγ(x)` by quadrature of the kernel.
///
/// For `Domain::Whole` the integral is taken in the transition frame of `y`.
pub fn apply_indicator_log(t: TimeParam, set: &Domain, y: &Point, quad: &QuadratureSpec) -> Result<LogNumber> {
    y.check_dim(set.dim())?;
    let kernel = MehlerKernel::new(t);
    let yc = y.coords();
    let integrand = |x: &[f64]| LogNumber::from_log(kernel.log_eval(x, yc));
    match set {
        Domain::Whole(_) => quadrature::integrate_gamma_log(integrand, &Domain::Whole(transition_frame(t, y)), quad),
        Domain::Region(_) => quadrature::integrate_gamma_log(integrand, set, quad),
    }
}

/// Closed form of `ln e^{tL} 1_E (y)` in one dimension via erf differences.
pub fn apply_indicator_closed_form_log(t: TimeParam, set: &Region, y: f64) -> Result<LogNumber> {
    if set.dim() != 1 {
        return Err(Error::UnsupportedDimension(set.dim()));
    }
    let shift = t.decay() * y;
    let scale = t.variance().sqrt();
    Ok(set
        .intervals()
        .into_iter()
        .map(|(a, b)| LogNumber::from_log(log_gamma_interval((a - shift) / scale, (b - shift) / scale)))
        .fold(LogNumber::ZERO, |acc, v| acc + v))
}

/// `e^{tL} f (x) = ∫ f(e^{−t}x + √(1−e^{−2t}) v) dγ(v)`.
///
/// When `support` is given, `f` vanishes outside it and the integral runs over
/// its preimage, which is again a ball or annulus.
pub fn apply_via_translation<F>(
    t: TimeParam,
    f: F,
    support: Option<&Region>,
    x: &Point,
    quad: &QuadratureSpec,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    apply_via_translation_log(t, |z| LogNumber::from_f64(f(z)), support, x, quad).map(|v| v.to_f64())
}

/// Log-domain form of [`apply_via_translation`]; `f_log` may be signed.
pub fn apply_via_translation_log<F>(
    t: TimeParam,
    f_log: F,
    support: Option<&Region>,
    x: &Point,
    quad: &QuadratureSpec,
) -> Result<LogNumber>
where
    F: Fn(&[f64]) -> LogNumber,
{
    let dim = x.dim();
    let decay = t.decay();
    let scale = t.variance().sqrt();
    let shift: Vec<f64> = x.coords().iter().map(|c| decay * c).collect();
    let domain = match support {
        None => Domain::whole(dim),
        Some(region) => {
            region.center().check_dim(dim)?;
            Domain::Region(preimage(region, &shift, scale)?)
        }
    };
    if dim > MAX_DIM {
        return Err(Error::UnsupportedDimension(dim));
    }
    quadrature::integrate_gamma_log(
        |v| {
            let mut z = [0.0; MAX_DIM];
            for d in 0..dim {
                z[d] = shift[d] + scale * v[d];
            }
            f_log(&z[..dim])
        },
        &domain,
        quad,
    )
}

fn preimage(region: &Region, shift: &[f64], scale: f64) -> Result<Region> {
    let map_ball = |b: &Ball| -> Result<Ball> {
        let center = b
            .center()
            .coords()
            .iter()
            .zip(shift)
            .map(|(c, s)| (c - s) / scale)
            .collect();
        Ball::new(Point::new(center)?, b.radius() / scale)
    };
    Ok(match region {
        Region::Ball(b) => Region::Ball(map_ball(b)?),
        Region::Annulus(a) => Region::Annulus(Annulus::new(map_ball(a.base())?, a.k())),
    })
}
