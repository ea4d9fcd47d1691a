//! Extended reals `[-∞, +∞]` with the conventions of convex analysis.

use std::fmt;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};

/// A value in the extended real line.
///
/// Variant order matters: the derived `PartialOrd` gives
/// `NegInf < Finite(_) < PosInf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE infinities onto the infinite variants. Panics on NaN.
    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN is not an extended real");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// IEEE view, used only at output boundaries.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Product with a non-negative real, using `0 · ∞ = 0`.
    pub fn scale(self, c: f64) -> Self {
        assert!(c >= 0.0, "scale factor must be non-negative");
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(c * x),
            _ if c == 0.0 => ExtReal::ZERO,
            other => other,
        }
    }

    /// Product of two non-negative extended reals with `0 · ∞ = 0`.
    pub fn mul_nonneg(self, other: ExtReal) -> Self {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a * b),
            (ExtReal::Finite(a), inf) | (inf, ExtReal::Finite(a)) => {
                if a == 0.0 {
                    ExtReal::ZERO
                } else {
                    inf
                }
            }
            (a, _) => a,
        }
    }

    /// `a / b` for `a ≥ 0`, `b ≥ 0` with `a/0 = +∞` (including `0/0`),
    /// matching the `1/0 := +∞` convention for the kernel constants.
    pub fn div_nonneg(self, b: f64) -> Self {
        assert!(b >= 0.0);
        match self {
            ExtReal::Finite(a) if b > 0.0 => ExtReal::Finite(a / b),
            ExtReal::Finite(_) => ExtReal::PosInf,
            other => other,
        }
    }

    pub fn min(self, other: ExtReal) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: ExtReal) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    /// Panics on `∞ − ∞`; every caller in this crate adds terms bounded
    /// below, so that case is a logic error.
    fn add(self, rhs: ExtReal) -> ExtReal {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::from_f64(a + b),
            (ExtReal::PosInf, ExtReal::NegInf) | (ExtReal::NegInf, ExtReal::PosInf) => {
                panic!("undefined sum +∞ + (−∞)")
            }
            (ExtReal::PosInf, _) | (_, ExtReal::PosInf) => ExtReal::PosInf,
            _ => ExtReal::NegInf,
        }
    }
}

impl Add<f64> for ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: f64) -> ExtReal {
        self + ExtReal::from_f64(rhs)
    }
}

impl std::iter::Sum for ExtReal {
    fn sum<I: Iterator<Item = ExtReal>>(iter: I) -> Self {
        iter.fold(ExtReal::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_follows_the_extended_line() {
        assert!(ExtReal::NegInf < ExtReal::Finite(-1e300));
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInf);
        assert!(ExtReal::Finite(1.0) < ExtReal::Finite(2.0));
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(ExtReal::PosInf.scale(0.0), ExtReal::ZERO);
        assert_eq!(ExtReal::PosInf.mul_nonneg(ExtReal::ZERO), ExtReal::ZERO);
        assert_eq!(ExtReal::PosInf.scale(2.0), ExtReal::PosInf);
    }

    #[test]
    fn division_conventions() {
        assert_eq!(ExtReal::Finite(1.0).div_nonneg(0.0), ExtReal::PosInf);
        assert_eq!(ExtReal::PosInf.div_nonneg(0.0), ExtReal::PosInf);
        assert_eq!(ExtReal::Finite(1.0).div_nonneg(2.0), ExtReal::Finite(0.5));
    }

    #[test]
    fn sums_absorb_infinity() {
        let s: ExtReal = [ExtReal::Finite(1.0), ExtReal::PosInf, ExtReal::Finite(-3.0)]
            .into_iter()
            .sum();
        assert_eq!(s, ExtReal::PosInf);
        assert_eq!(ExtReal::from_f64(f64::INFINITY), ExtReal::PosInf);
    }
}
