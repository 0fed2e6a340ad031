//! Mehler-kernel numerics for `L^p(γ)`–`L^q(γ)` off-diagonal estimates of the
//! Ornstein–Uhlenbeck semigroup on Gaussian space.
//!
//! Everything that can leave the range of `f64` is computed in log space
//! ([`LogNumber`]). The modules build on each other bottom-up:
//! [`geometry`] and [`quadrature`] integrate against the Gaussian measure,
//! [`mehler`] evaluates and applies the semigroup, [`estimates`] holds the
//! closed-form thresholds, and [`experiments`] combines them into sweeps and checks.

pub mod cli;
pub mod error;
pub mod estimates;
pub mod experiments;
pub mod geometry;
pub mod lognum;
pub mod mehler;
pub mod quadrature;
pub mod selftest;
pub mod special;

pub use error::{Error, Result};
pub use estimates::{McIntoshConstant, OffDiagHypothesis};
pub use experiments::{RegimeCell, RegimeClass, SweepResult, SweepRow};
pub use geometry::{Annulus, Ball, Point, Region};
pub use lognum::LogNumber;
pub use mehler::TimeParam;
pub use quadrature::{Domain, QuadratureSpec, Scheme};
