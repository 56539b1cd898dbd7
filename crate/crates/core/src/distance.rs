//! Distances take values in the nonnegative reals extended with infinity,
//! plus a distinct `Undefined` marker for incomparable pairs.

use std::cmp::Ordering;
use std::fmt;

/// Absolute tolerance for floating-point distance comparisons. Integer-weighted
/// families stay exact in f64, so the tolerance only matters for fractional
/// weights supplied through explicit tables.
pub const ABS_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distance {
    Finite(f64),
    Infinity,
    Undefined,
}

impl Distance {
    pub const ZERO: Distance = Distance::Finite(0.0);

    pub fn finite(v: f64) -> Distance {
        Distance::Finite(v)
    }

    pub fn is_defined(self) -> bool {
        !matches!(self, Distance::Undefined)
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            Distance::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Numeric `self <= other` with absolute tolerance. Undefined compares
    /// false against everything, including itself.
    pub fn le_tol(self, other: Distance) -> bool {
        match (self, other) {
            (Distance::Undefined, _) | (_, Distance::Undefined) => false,
            (_, Distance::Infinity) => true,
            (Distance::Infinity, Distance::Finite(_)) => false,
            (Distance::Finite(a), Distance::Finite(b)) => a <= b + ABS_TOL,
        }
    }

    /// Exact strict `self < other`; used for tie-stable improvement checks.
    pub fn lt_exact(self, other: Distance) -> bool {
        matches!(self.partial_cmp(&other), Some(Ordering::Less))
    }

    /// Exact max of two defined distances.
    pub fn max_defined(self, other: Distance) -> Distance {
        match self.partial_cmp(&other) {
            Some(Ordering::Less) => other,
            _ => self,
        }
    }

    /// Exact min of two defined distances.
    pub fn min_defined(self, other: Distance) -> Distance {
        match self.partial_cmp(&other) {
            Some(Ordering::Greater) => other,
            _ => self,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Distance::Finite(v) => v.abs() <= ABS_TOL,
            _ => false,
        }
    }
}

/// Sum along a chain; Undefined poisons, Infinity dominates.
impl std::ops::Add for Distance {
    type Output = Distance;

    fn add(self, other: Distance) -> Distance {
        match (self, other) {
            (Distance::Undefined, _) | (_, Distance::Undefined) => Distance::Undefined,
            (Distance::Infinity, _) | (_, Distance::Infinity) => Distance::Infinity,
            (Distance::Finite(a), Distance::Finite(b)) => Distance::Finite(a + b),
        }
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Distance) -> Option<Ordering> {
        match (self, other) {
            (Distance::Undefined, _) | (_, Distance::Undefined) => None,
            (Distance::Infinity, Distance::Infinity) => Some(Ordering::Equal),
            (Distance::Infinity, Distance::Finite(_)) => Some(Ordering::Greater),
            (Distance::Finite(_), Distance::Infinity) => Some(Ordering::Less),
            (Distance::Finite(a), Distance::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(v) => write!(f, "{}", v),
            Distance::Infinity => write!(f, "inf"),
            Distance::Undefined => write!(f, "undef"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undefined_is_incomparable() {
        assert_eq!(Distance::Undefined.partial_cmp(&Distance::Undefined), None);
        assert!(!Distance::Undefined.le_tol(Distance::Infinity));
        assert!(!Distance::Finite(0.0).le_tol(Distance::Undefined));
    }

    #[test]
    fn infinity_dominates() {
        assert!(Distance::Finite(1e18).le_tol(Distance::Infinity));
        assert!(!Distance::Infinity.le_tol(Distance::Finite(1e18)));
        assert_eq!(
            Distance::Infinity + Distance::Finite(3.0),
            Distance::Infinity
        );
    }

    #[test]
    fn tolerance_absorbs_rounding() {
        assert!(Distance::Finite(1.0 + 1e-12).le_tol(Distance::Finite(1.0)));
        assert!(!Distance::Finite(1.0 + 1e-6).le_tol(Distance::Finite(1.0)));
    }
}
