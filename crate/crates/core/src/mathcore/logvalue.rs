use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul};

/// A real number stored as `sign · exp(log_magnitude)`.
#[derive(Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: i8,
    log_magnitude: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        log_magnitude: f64::NEG_INFINITY,
    };

    pub const ONE: LogValue = LogValue {
        sign: 1,
        log_magnitude: 0.0,
    };

    /// Builds a positive value directly from its natural log.
    pub fn from_ln(log_magnitude: f64) -> Self {
        if log_magnitude == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogValue {
            sign: 1,
            log_magnitude,
        }
    }

    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        match sign.cmp(&0) {
            Ordering::Equal => Self::ZERO,
            Ordering::Less => LogValue {
                sign: -1,
                log_magnitude,
            },
            Ordering::Greater => Self::from_ln(log_magnitude),
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue {
                sign: if x < 0.0 { -1 } else { 1 },
                log_magnitude: x.abs().ln(),
            }
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn log_magnitude(&self) -> f64 {
        self.log_magnitude
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Materializes the value. Overflows to `±inf` or underflows to `0`
    /// when the magnitude is outside the `f64` range.
    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_magnitude.exp(),
        }
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && n % 2 != 0 { -1 } else { 1 };
        LogValue {
            sign,
            log_magnitude: self.log_magnitude * f64::from(n),
        }
    }

    pub fn recip(self) -> Self {
        assert!(!self.is_zero(), "reciprocal of zero LogValue");
        LogValue {
            sign: self.sign,
            log_magnitude: -self.log_magnitude,
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;

    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        LogValue {
            sign: self.sign * rhs.sign,
            log_magnitude: self.log_magnitude + rhs.log_magnitude,
        }
    }
}

impl Div for LogValue {
    type Output = LogValue;

    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: LogValue) -> LogValue {
        self * rhs.recip()
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "LogValue(0)"),
            s => write!(
                f,
                "LogValue({}exp({}))",
                if s < 0 { "-" } else { "" },
                self.log_magnitude
            ),
        }
    }
}

/// `ln(k!!)` for `k ≥ -1`, with `(-1)!! = 0!! = 1`.
///
/// Factors are multiplied in `f64` until the partial product nears the top
/// of the range and only then folded into the log, so small `k` are exact
/// and large `k` lose at most a few ulps per chunk.
pub fn ln_double_factorial(k: i64) -> f64 {
    assert!(k >= -1, "double factorial of {k}");
    let mut acc = 0.0;
    let mut chunk = 1.0_f64;
    let mut j = k;
    while j > 1 {
        let next = chunk * j as f64;
        if next > 1e280 {
            acc += chunk.ln();
            chunk = j as f64;
        } else {
            chunk = next;
        }
        j -= 2;
    }
    acc + chunk.ln()
}

/// `ln(k!!)` as a [`LogValue`] (always positive).
pub fn double_factorial_log(k: u64) -> LogValue {
    LogValue::from_ln(ln_double_factorial(k as i64))
}

/// `ln((k-1)!! / k!!)` for `k ≥ 0`, summed factor by factor as
/// `Σ ln(1 - 1/j)` so that the result keeps full relative precision
/// even where `ln(k!!)` itself is large.
pub fn ln_double_factorial_ratio(k: u64) -> f64 {
    let mut acc = 0.0;
    let mut j = k;
    while j >= 2 {
        acc += (-1.0 / j as f64).ln_1p();
        j -= 2;
    }
    acc
}
