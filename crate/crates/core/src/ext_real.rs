//! Extended reals `ℝ ∪ {−∞}`.
//!
//! Rewards and value functions may be `−∞` (zero consumption under CRRA
//! utility, for instance). A tagged representation keeps that case exact
//! instead of approximating it with a large negative number.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

/// A real number or `−∞`. `+∞` and NaN are not representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps `f64::NEG_INFINITY` to [`ExtReal::NegInf`]; `None` for NaN or `+∞`.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x.is_nan() || x == f64::INFINITY {
            None
        } else if x == f64::NEG_INFINITY {
            Some(ExtReal::NegInf)
        } else {
            Some(ExtReal::Finite(x))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::NegInf => None,
        }
    }

    /// `−∞` becomes `f64::NEG_INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::NegInf => f64::NEG_INFINITY,
        }
    }

    pub fn max(self, other: Self) -> Self {
        match (self, other) {
            (ExtReal::NegInf, y) => y,
            (x, ExtReal::NegInf) => x,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.max(b)),
        }
    }

    pub fn min(self, other: Self) -> Self {
        match (self, other) {
            (ExtReal::NegInf, _) | (_, ExtReal::NegInf) => ExtReal::NegInf,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.min(b)),
        }
    }

    /// Multiplication by a nonnegative finite scalar. `0 · (−∞)` is taken to be
    /// `−∞`; callers that need the measure-theoretic `0` convention skip
    /// zero-probability terms before scaling.
    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c >= 0.0 && c.is_finite());
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(c * x),
            ExtReal::NegInf => ExtReal::NegInf,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::NegInf,
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: f64) -> ExtReal {
        debug_assert!(rhs.is_finite());
        match self {
            ExtReal::Finite(a) => ExtReal::Finite(a + rhs),
            ExtReal::NegInf => ExtReal::NegInf,
        }
    }
}

impl From<f64> for ExtReal {
    /// Panics on NaN or `+∞`.
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x).unwrap_or_else(|| panic!("{x} is not an extended real"))
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::NegInf, ExtReal::NegInf) => Some(Ordering::Equal),
            (ExtReal::NegInf, _) => Some(Ordering::Less),
            (_, ExtReal::NegInf) => Some(Ordering::Greater),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::NegInf => f.write_str("-inf"),
        }
    }
}

impl serde::Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::NegInf => s.serialize_str("-inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_conventions() {
        let c = ExtReal::Finite(2.5);
        assert_eq!(ExtReal::NegInf + c, ExtReal::NegInf);
        assert_eq!(c + ExtReal::NegInf, ExtReal::NegInf);
        assert_eq!(ExtReal::NegInf.max(c), c);
        assert_eq!(c.max(ExtReal::NegInf), c);
        assert_eq!(ExtReal::NegInf.max(ExtReal::NegInf), ExtReal::NegInf);
        assert_eq!(c + 1.0, ExtReal::Finite(3.5));
        assert!(ExtReal::NegInf < ExtReal::Finite(-1e300));
    }

    #[test]
    fn conversion_rejects_nan_and_pos_inf() {
        assert_eq!(ExtReal::from_f64(f64::NAN), None);
        assert_eq!(ExtReal::from_f64(f64::INFINITY), None);
        assert_eq!(ExtReal::from_f64(f64::NEG_INFINITY), Some(ExtReal::NegInf));
        assert_eq!(ExtReal::NegInf.to_f64(), f64::NEG_INFINITY);
    }
}
