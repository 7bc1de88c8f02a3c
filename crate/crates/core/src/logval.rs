//! Signed values stored as `(sign, ln|x|)`.
//!
//! Cap volumes at `N = 250` carry factors like `8^250` that overflow an
//! `f64`, while the quantities built from them (fractions, conditional
//! moments) are ordinary numbers. Everything that scales like `r^N` is kept
//! as a [`LogValue`] until the final ratio is formed.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul, Neg};

/// Relative size below which a cancelled sum is declared exactly zero.
const CANCEL_TOL: f64 = 1e-15;

#[derive(Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: i8,
    ln_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, ln_abs: f64::NEG_INFINITY };
    pub const ONE: LogValue = LogValue { sign: 1, ln_abs: 0.0 };

    /// Builds a value from its sign and the natural log of its magnitude.
    ///
    /// A sign of zero, or a magnitude of `-inf`, gives [`LogValue::ZERO`].
    pub fn new(sign: i8, ln_abs: f64) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue { sign: sign.signum(), ln_abs }
        }
    }

    /// Positive value `exp(ln_abs)`.
    pub fn from_ln(ln_abs: f64) -> Self {
        Self::new(1, ln_abs)
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: if x > 0.0 { 1 } else { -1 }, ln_abs: x.abs().ln() }
        }
    }

    pub fn to_real(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_abs.exp(),
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// `ln|x|`; `-inf` for zero.
    pub fn ln_abs(self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.ln_abs
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Multiplies by `exp(ln_factor)`.
    pub fn scale_ln(self, ln_factor: f64) -> Self {
        if self.sign == 0 {
            self
        } else {
            LogValue { sign: self.sign, ln_abs: self.ln_abs + ln_factor }
        }
    }

    /// Multiplies by an ordinary real.
    pub fn scale(self, factor: f64) -> Self {
        self * LogValue::from_real(factor)
    }

    /// Signed log-sum of an arbitrary number of terms.
    ///
    /// Positive and negative terms are accumulated separately with the usual
    /// max-shift, then combined. When the two partial sums agree to within a
    /// relative `1e-15` the result is exactly zero.
    pub fn sum<I: IntoIterator<Item = LogValue>>(terms: I) -> Self {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for t in terms {
            match t.sign.cmp(&0) {
                Ordering::Greater => pos.push(t.ln_abs),
                Ordering::Less => neg.push(t.ln_abs),
                Ordering::Equal => {}
            }
        }
        let lp = log_sum_exp(&pos);
        let ln = log_sum_exp(&neg);
        match (lp == f64::NEG_INFINITY, ln == f64::NEG_INFINITY) {
            (true, true) => Self::ZERO,
            (false, true) => Self::from_ln(lp),
            (true, false) => Self::new(-1, ln),
            (false, false) => {
                let (big, small, sign) = if lp >= ln { (lp, ln, 1) } else { (ln, lp, -1) };
                let gap = big - small;
                // 1 - exp(-gap), accurate for small gaps
                let rel = -(-gap).exp_m1();
                if rel <= CANCEL_TOL {
                    Self::ZERO
                } else {
                    Self::new(sign, big + rel.ln())
                }
            }
        }
    }
}

/// `ln Σ exp(xᵢ)`; `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl Mul for LogValue {
    type Output = LogValue;

    fn mul(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        LogValue { sign: self.sign * rhs.sign, ln_abs: self.ln_abs + rhs.ln_abs }
    }
}

/// Dividing by zero is a logic error and panics.
impl Div for LogValue {
    type Output = LogValue;

    fn div(self, rhs: LogValue) -> LogValue {
        assert!(!rhs.is_zero(), "LogValue division by zero");
        if self.sign == 0 {
            return self;
        }
        LogValue { sign: self.sign * rhs.sign, ln_abs: self.ln_abs - rhs.ln_abs }
    }
}

impl Neg for LogValue {
    type Output = LogValue;

    fn neg(self) -> LogValue {
        LogValue { sign: -self.sign, ln_abs: self.ln_abs }
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "LogValue(0)"),
            1 => write!(f, "LogValue(+exp({}))", self.ln_abs),
            _ => write!(f, "LogValue(-exp({}))", self.ln_abs),
        }
    }
}
