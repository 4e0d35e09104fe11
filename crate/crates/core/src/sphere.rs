//! Points of the Riemann sphere.
//!
//! The point at infinity is an explicit variant. Finite points always carry
//! finite components.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

pub type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Finite(C64),
    Infinity,
}

impl Point {
    pub fn finite(re: f64, im: f64) -> Self {
        Point::Finite(C64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Point::Infinity)
    }

    pub fn as_finite(&self) -> Option<C64> {
        match *self {
            Point::Finite(z) => Some(z),
            Point::Infinity => None,
        }
    }

    /// Chordal distance on the unit sphere (diameter 2 normalization).
    pub fn chordal(&self, other: &Point) -> f64 {
        match (*self, *other) {
            (Point::Infinity, Point::Infinity) => 0.0,
            (Point::Finite(z), Point::Infinity) | (Point::Infinity, Point::Finite(z)) => {
                2.0 / (1.0 + z.norm_sqr()).sqrt()
            }
            (Point::Finite(a), Point::Finite(b)) => {
                2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt())
            }
        }
    }

    /// Difference in whichever chart keeps both points bounded.
    ///
    /// Smooth away from the chart switch at |z| = 1, which makes it usable as
    /// a residual for Newton iterations on orbit relations.
    pub fn chart_difference(&self, other: &Point) -> C64 {
        match (*self, *other) {
            (Point::Infinity, Point::Infinity) => C64::new(0.0, 0.0),
            (Point::Finite(z), Point::Infinity) | (Point::Infinity, Point::Finite(z)) => {
                if z.norm() > 1.0 {
                    z.inv()
                } else {
                    // far from infinity; any bounded proxy larger than the chart switch works
                    C64::new(1.0 + z.norm(), 0.0)
                }
            }
            (Point::Finite(a), Point::Finite(b)) => {
                if a.norm() > 1.0 && b.norm() > 1.0 {
                    a.inv() - b.inv()
                } else {
                    a - b
                }
            }
        }
    }

    /// Reciprocal chart coordinate: `1/z`, with `1/∞ = 0` and `1/0 = ∞`.
    pub fn recip(&self) -> Point {
        match *self {
            Point::Infinity => Point::Finite(C64::new(0.0, 0.0)),
            Point::Finite(z) if z == C64::new(0.0, 0.0) => Point::Infinity,
            Point::Finite(z) => Point::Finite(z.inv()),
        }
    }
}

impl From<C64> for Point {
    fn from(z: C64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            Point::Finite(z)
        } else {
            Point::Infinity
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Infinity => write!(f, "∞"),
            Point::Finite(z) => write!(f, "{:.12}{:+.12}i", z.re, z.im),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chordal_distance_to_infinity() {
        let p = Point::finite(0.0, 0.0);
        assert!((p.chordal(&Point::Infinity) - 2.0).abs() < 1e-15);
        assert_eq!(Point::Infinity.chordal(&Point::Infinity), 0.0);
    }

    #[test]
    fn recip_swaps_zero_and_infinity() {
        assert_eq!(Point::finite(0.0, 0.0).recip(), Point::Infinity);
        assert_eq!(Point::Infinity.recip(), Point::finite(0.0, 0.0));
    }
}
