//! Points, balls and dyadic annuli in R^n, and their Gaussian measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lognum::LogNumber;
use crate::quadrature::{self, Domain, QuadratureSpec};
use crate::special::log_gamma_interval;

pub const MAX_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("point", "needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point", "coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim.max(1)])
    }

    /// `value · e₁` in dimension `dim`.
    pub fn on_axis(dim: usize, value: f64) -> Self {
        let mut coords = vec![0.0; dim.max(1)];
        coords[0] = value;
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point(vec![x])
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

/// Open ball `B(c_B, r_B)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(
                "radius",
                format!("must be positive and finite, got {radius}"),
            ));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// `λB = B(c_B, λ r_B)`.
    pub fn dilate(&self, factor: f64) -> Result<Ball> {
        Ball::new(self.center.clone(), self.radius * factor)
    }

    /// Admissible radius bound `min(1, |c_B|⁻¹)`.
    pub fn admissible_radius(center: &Point) -> f64 {
        let c = center.norm();
        if c <= 1.0 {
            1.0
        } else {
            1.0 / c
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.radius <= Self::admissible_radius(&self.center) * (1.0 + 1e-12)
    }

    pub fn is_maximal_admissible(&self) -> bool {
        let r = Self::admissible_radius(&self.center);
        (self.radius - r).abs() <= 1e-12 * r
    }

    pub fn annulus(&self, k: u32) -> Annulus {
        Annulus { base: self.clone(), k }
    }
}

/// `C_0(B) = 2B`, `C_k(B) = 2^{k+1}B ∖ 2^k B` for `k ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    base: Ball,
    k: u32,
}

impl Annulus {
    pub fn new(base: Ball, k: u32) -> Self {
        Annulus { base, k }
    }

    pub fn base(&self) -> &Ball {
        &self.base
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Inner and outer radius about the base center.
    pub fn radii(&self) -> (f64, f64) {
        let r = self.base.radius;
        if self.k == 0 {
            (0.0, 2.0 * r)
        } else {
            let inner = 2f64.powi(self.k as i32) * r;
            (inner, 2.0 * inner)
        }
    }
}

/// A bounded testing set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Ball(Ball),
    Annulus(Annulus),
}

impl Region {
    pub fn dim(&self) -> usize {
        self.center().dim()
    }

    pub fn center(&self) -> &Point {
        match self {
            Region::Ball(b) => b.center(),
            Region::Annulus(a) => a.base().center(),
        }
    }

    /// `{ c + rω : r0 ≤ r ≤ r1, |ω| = 1 }` as `(r0, r1)`.
    pub fn radial_range(&self) -> (f64, f64) {
        match self {
            Region::Ball(b) => (0.0, b.radius()),
            Region::Annulus(a) => a.radii(),
        }
    }

    /// The region as a union of closed intervals (dimension one only).
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let c = self.center().coords()[0];
        match self.radial_range() {
            (0.0, r1) => vec![(c - r1, c + r1)],
            (r0, r1) => vec![(c - r1, c - r0), (c + r0, c + r1)],
        }
    }
}

impl From<Ball> for Region {
    fn from(b: Ball) -> Self {
        Region::Ball(b)
    }
}

impl From<Annulus> for Region {
    fn from(a: Annulus) -> Self {
        Region::Annulus(a)
    }
}

/// The maximal admissible ball `B(c, min(1, |c|⁻¹))`.
pub fn make_maximal_admissible_ball(center: Point) -> Ball {
    let radius = Ball::admissible_radius(&center);
    Ball { center, radius }
}

/// `dist(B, C_k(B))`: zero for `k = 0`, `(2^k − 1) r_B` otherwise.
pub fn set_distance(ball: &Ball, annulus: &Annulus) -> Result<f64> {
    if annulus.base() != ball {
        return Err(Error::BaseMismatch);
    }
    Ok(match annulus.k() {
        0 => 0.0,
        k => (2f64.powi(k as i32) - 1.0) * ball.radius(),
    })
}

/// `ln γ(S)` for the Gaussian measure `π^{-n/2} e^{-|x|²} dx`.
///
/// One dimension uses erf differences; two and three use polar quadrature
/// about the center of `S`.
pub fn gamma_log(region: &Region, quad: &QuadratureSpec) -> Result<LogNumber> {
    match region.dim() {
        1 => Ok(gamma_log_1d(region)),
        2 | 3 => quadrature::integrate_gamma_log(|_| LogNumber::ONE, &Domain::from(region.clone()), quad),
        n => Err(Error::UnsupportedDimension(n)),
    }
}

fn gamma_log_1d(region: &Region) -> LogNumber {
    region
        .intervals()
        .into_iter()
        .map(|(a, b)| LogNumber::from_log(log_gamma_interval(a, b)))
        .fold(LogNumber::ZERO, |acc, v| acc + v)
}
