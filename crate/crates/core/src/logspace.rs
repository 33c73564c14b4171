//! Sign-tracked logarithmic arithmetic.
//!
//! Deformation factorials oscillate between magnitudes of order
//! `exp(±C sqrt(n))`, far outside the double-precision range, so every
//! factorial-like quantity is carried as a sign plus a log-magnitude.

use serde::{Deserialize, Serialize};

/// A real number stored as `sign * exp(log_mag)`.
///
/// `sign == 0` encodes exact zero; `log_mag` is meaningless in that case and
/// is normalized to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogWeight {
    pub sign: i8,
    pub log_mag: f64,
}

impl LogWeight {
    pub const ONE: LogWeight = LogWeight { sign: 1, log_mag: 0.0 };
    pub const ZERO: LogWeight = LogWeight { sign: 0, log_mag: 0.0 };

    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 {
            Self::ZERO
        } else {
            LogWeight { sign: sign.signum(), log_mag }
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            LogWeight { sign: if v > 0.0 { 1 } else { -1 }, log_mag: v.abs().ln() }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Back to a plain double. Saturates to `±inf` when the magnitude exceeds
    /// the floating range and to 0 on underflow.
    pub fn value(&self) -> f64 {
        if self.sign == 0 {
            0.0
        } else {
            f64::from(self.sign) * self.log_mag.exp()
        }
    }

    /// Multiplicative composition: exact in sign, additive in log-magnitude.
    pub fn mul(&self, other: &LogWeight) -> LogWeight {
        if self.sign == 0 || other.sign == 0 {
            Self::ZERO
        } else {
            LogWeight { sign: self.sign * other.sign, log_mag: self.log_mag + other.log_mag }
        }
    }

    pub fn recip(&self) -> LogWeight {
        assert!(self.sign != 0, "reciprocal of zero LogWeight");
        LogWeight { sign: self.sign, log_mag: -self.log_mag }
    }

    pub fn abs(&self) -> LogWeight {
        LogWeight { sign: self.sign.abs(), log_mag: self.log_mag }
    }

    pub fn powi(&self, k: i32) -> LogWeight {
        if self.sign == 0 {
            return if k == 0 { Self::ONE } else { Self::ZERO };
        }
        let sign = if k % 2 == 0 { 1 } else { self.sign };
        LogWeight { sign, log_mag: self.log_mag * f64::from(k) }
    }
}

impl std::ops::Mul for LogWeight {
    type Output = LogWeight;
    fn mul(self, rhs: LogWeight) -> LogWeight {
        LogWeight::mul(&self, &rhs)
    }
}

impl std::ops::Neg for LogWeight {
    type Output = LogWeight;
    fn neg(self) -> LogWeight {
        LogWeight { sign: -self.sign, log_mag: self.log_mag }
    }
}

/// Stable sum of `sign_i * exp(log_i)` terms: shift by the running maximum,
/// accumulate in linear space, return as a `LogWeight`.
pub fn signed_log_sum(terms: &[LogWeight]) -> LogWeight {
    let max_log = terms
        .iter()
        .filter(|t| t.sign != 0)
        .map(|t| t.log_mag)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_log == f64::NEG_INFINITY {
        return LogWeight::ZERO;
    }
    let mut acc = 0.0f64;
    for t in terms {
        if t.sign != 0 {
            acc += f64::from(t.sign) * (t.log_mag - max_log).exp();
        }
    }
    if acc == 0.0 {
        LogWeight::ZERO
    } else {
        LogWeight { sign: if acc > 0.0 { 1 } else { -1 }, log_mag: max_log + acc.abs().ln() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_is_exact_in_sign() {
        let a = LogWeight::new(-1, 2.0);
        let b = LogWeight::new(-1, 3.0);
        let c = a.mul(&b);
        assert_eq!(c.sign, 1);
        assert!((c.log_mag - 5.0).abs() < 1e-15);
    }

    #[test]
    fn zero_absorbs() {
        let a = LogWeight::from_value(0.0);
        let b = LogWeight::new(1, 100.0);
        assert!(a.mul(&b).is_zero());
    }

    #[test]
    fn value_round_trip() {
        for &v in &[1.5, -2.25e-8, 3.0e12, -1.0] {
            assert!((LogWeight::from_value(v).value() - v).abs() <= 1e-12 * v.abs());
        }
    }

    #[test]
    fn signed_sum_cancels() {
        let terms = vec![LogWeight::from_value(5.0), LogWeight::from_value(-5.0)];
        assert!(signed_log_sum(&terms).is_zero());
        let terms = vec![
            LogWeight::from_value(1.0),
            LogWeight::from_value(2.0),
            LogWeight::from_value(-0.5),
        ];
        let s = signed_log_sum(&terms);
        assert!((s.value() - 2.5).abs() < 1e-14);
    }
}
