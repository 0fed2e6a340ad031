//! Signed numbers stored as `sign · exp(log_magnitude)`.
//!
//! The off-diagonal quantities along the testing family scale like
//! `exp(±|c_B|²)`, far outside the range of `f64`. Everything that can leave
//! that range is carried as a [`LogNumber`] and only converted back at the edge.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Negative = -1,
    Zero = 0,
    Positive = 1,
}

impl Sign {
    fn flip(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    fn times(self, other: Sign) -> Sign {
        match (self as i8) * (other as i8) {
            1 => Sign::Positive,
            -1 => Sign::Negative,
            _ => Sign::Zero,
        }
    }
}

/// A real number as a sign and the natural log of its magnitude.
///
/// `sign == Zero` exactly when `log_magnitude == -inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNumber {
    sign: Sign,
    log_magnitude: f64,
}

impl LogNumber {
    pub const ZERO: LogNumber = LogNumber {
        sign: Sign::Zero,
        log_magnitude: f64::NEG_INFINITY,
    };
    pub const ONE: LogNumber = LogNumber {
        sign: Sign::Positive,
        log_magnitude: 0.0,
    };

    /// Positive number `exp(log_magnitude)`. `-inf` gives zero.
    pub fn from_log(log_magnitude: f64) -> Self {
        Self::new(Sign::Positive, log_magnitude)
    }

    pub fn new(sign: Sign, log_magnitude: f64) -> Self {
        if sign == Sign::Zero || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogNumber { sign, log_magnitude }
        }
    }

    pub fn from_f64(value: f64) -> Self {
        match value.partial_cmp(&0.0) {
            Some(Ordering::Greater) => Self::new(Sign::Positive, value.ln()),
            Some(Ordering::Less) => Self::new(Sign::Negative, (-value).ln()),
            Some(Ordering::Equal) => Self::ZERO,
            None => LogNumber {
                sign: Sign::Positive,
                log_magnitude: f64::NAN,
            },
        }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn log_magnitude(&self) -> f64 {
        self.log_magnitude
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Positive
    }

    pub fn is_finite(&self) -> bool {
        !self.log_magnitude.is_nan() && self.log_magnitude < f64::INFINITY
    }

    /// Linear value; may overflow to ±inf or underflow to 0.
    pub fn to_f64(&self) -> f64 {
        match self.sign {
            Sign::Zero => 0.0,
            Sign::Positive => self.log_magnitude.exp(),
            Sign::Negative => -self.log_magnitude.exp(),
        }
    }

    /// Linear value when it neither overflows nor underflows.
    pub fn to_f64_checked(&self) -> Option<f64> {
        let v = self.to_f64();
        (self.is_zero() || v.is_normal()).then_some(v)
    }

    pub fn abs(&self) -> Self {
        Self::new(self.sign.times(self.sign), self.log_magnitude)
    }

    /// Real power of a non-negative number.
    ///
    /// Panics on negative input.
    pub fn powf(&self, exponent: f64) -> Self {
        assert!(self.sign != Sign::Negative, "powf of a negative LogNumber");
        if self.is_zero() {
            return if exponent == 0.0 { Self::ONE } else { Self::ZERO };
        }
        Self::from_log(self.log_magnitude * exponent)
    }

    pub fn recip(&self) -> Self {
        LogNumber {
            sign: self.sign,
            log_magnitude: -self.log_magnitude,
        }
    }

    /// `|self - other| / |other|` computed in log space.
    pub fn rel_diff(&self, other: &LogNumber) -> f64 {
        if other.is_zero() {
            return if self.is_zero() { 0.0 } else { f64::INFINITY };
        }
        let diff = *self - *other;
        (diff.log_magnitude - other.log_magnitude).exp()
    }
}

impl Default for LogNumber {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for LogNumber {
    fn from(value: f64) -> Self {
        Self::from_f64(value)
    }
}

impl Neg for LogNumber {
    type Output = LogNumber;
    fn neg(self) -> LogNumber {
        LogNumber {
            sign: self.sign.flip(),
            log_magnitude: self.log_magnitude,
        }
    }
}

impl Mul for LogNumber {
    type Output = LogNumber;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: LogNumber) -> LogNumber {
        LogNumber::new(self.sign.times(rhs.sign), self.log_magnitude + rhs.log_magnitude)
    }
}

impl Div for LogNumber {
    type Output = LogNumber;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: LogNumber) -> LogNumber {
        self * rhs.recip()
    }
}

impl Add for LogNumber {
    type Output = LogNumber;
    fn add(self, rhs: LogNumber) -> LogNumber {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.log_magnitude >= rhs.log_magnitude {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let gap = small.log_magnitude - big.log_magnitude;
        if big.sign == small.sign {
            LogNumber::new(big.sign, big.log_magnitude + gap.exp().ln_1p())
        } else if gap == 0.0 {
            LogNumber::ZERO
        } else {
            LogNumber::new(big.sign, big.log_magnitude + (-gap.exp_m1()).ln())
        }
    }
}

impl Sub for LogNumber {
    type Output = LogNumber;
    fn sub(self, rhs: LogNumber) -> LogNumber {
        self + (-rhs)
    }
}

/// Streaming `log Σ exp(l_i)` over non-negative terms.
#[derive(Clone, Copy, Debug)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term > self.max {
            self.scaled_sum = self.scaled_sum * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        } else {
            self.scaled_sum += (log_term - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.scaled_sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}

/// Streaming sum of signed [`LogNumber`] terms.
///
/// Positive and negative parts are accumulated separately and cancelled once
/// at the end; `magnitude()` returns `Σ|term|` for relative error control.
#[derive(Clone, Copy, Debug, Default)]
pub struct SignedLogSum {
    positive: LogSumExp,
    negative: LogSumExp,
}

impl SignedLogSum {
    pub fn push(&mut self, term: LogNumber) {
        match term.sign {
            Sign::Positive => self.positive.push(term.log_magnitude),
            Sign::Negative => self.negative.push(term.log_magnitude),
            Sign::Zero => {}
        }
    }

    pub fn value(&self) -> LogNumber {
        LogNumber::from_log(self.positive.value()) - LogNumber::from_log(self.negative.value())
    }

    pub fn magnitude(&self) -> LogNumber {
        LogNumber::from_log(self.positive.value()) + LogNumber::from_log(self.negative.value())
    }
}

/// `log Σ exp(l_i)` of a slice.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let mut acc = LogSumExp::default();
    for &t in terms {
        acc.push(t);
    }
    acc.value()
}
