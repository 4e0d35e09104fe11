//! Rational maps of the Riemann sphere.

use crate::error::{Error, Result};
use crate::poly::{cluster_roots, roots, Poly, CLUSTER_RADIUS};
use crate::sphere::{Point, C64};
use serde::{Deserialize, Serialize};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest supported degree.
pub const MAX_DEGREE: usize = 16;

/// `num(z) / den(z)` with coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalMap {
    pub num: Vec<C64>,
    pub den: Vec<C64>,
}

/// Critical point with its local degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub point: Point,
    pub local_degree: usize,
}

impl RationalMap {
    /// Builds and validates a map. Exactly-zero leading coefficients are
    /// stripped.
    pub fn new(num: Vec<C64>, den: Vec<C64>) -> Result<Self> {
        let num = Poly(num).trimmed(0.0).0;
        let den = Poly(den).trimmed(0.0).0;
        let map = RationalMap { num, den };
        map.validate()?;
        Ok(map)
    }

    /// Builds a map without validation; for inner loops that only evaluate.
    pub fn unchecked(num: Vec<C64>, den: Vec<C64>) -> Self {
        RationalMap { num: Poly(num).trimmed(0.0).0, den: Poly(den).trimmed(0.0).0 }
    }

    pub fn polynomial(coeffs: Vec<C64>) -> Result<Self> {
        Self::new(coeffs, vec![C64::new(1.0, 0.0)])
    }

    /// `z^d`.
    pub fn power(d: usize) -> Self {
        RationalMap {
            num: Poly::monomial(C64::new(1.0, 0.0), d).0,
            den: vec![C64::new(1.0, 0.0)],
        }
    }

    pub fn num_poly(&self) -> Poly {
        Poly(self.num.clone())
    }

    pub fn den_poly(&self) -> Poly {
        Poly(self.den.clone())
    }

    pub fn degree(&self) -> usize {
        slice_degree(&self.num).max(slice_degree(&self.den))
    }

    pub fn is_polynomial(&self) -> bool {
        slice_degree(&self.den) == 0
    }

    fn validate(&self) -> Result<()> {
        let (n, d) = (self.num_poly(), self.den_poly());
        if d.is_zero() {
            return Err(Error::InvalidMap("zero denominator".into()));
        }
        if n.is_zero() {
            return Err(Error::InvalidMap("constant map".into()));
        }
        let deg = self.degree();
        if deg < 1 {
            return Err(Error::InvalidMap("degree must be at least 1".into()));
        }
        if deg > MAX_DEGREE {
            return Err(Error::InvalidMap(format!("degree {deg} exceeds {MAX_DEGREE}")));
        }
        if self
            .num
            .iter()
            .chain(&self.den)
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        if let Some(r) = self.common_root(1e-8) {
            return Err(Error::InvalidMap(format!("numerator and denominator share root {r}")));
        }
        Ok(())
    }

    /// A root of the denominator lying within `tol` of a root of the numerator.
    pub fn common_root(&self, tol: f64) -> Option<C64> {
        let (n, d) = (self.num_poly(), self.den_poly());
        if d.degree() == 0 || n.degree() == 0 {
            return None;
        }
        let rn = roots(&n).ok()?;
        let rd = roots(&d).ok()?;
        rd.into_iter()
            .find(|b| rn.iter().any(|a| (a - b).norm() < tol * (1.0 + b.norm())))
    }

    /// Evaluation on the sphere. For |z| > 1 the map is evaluated in the
    /// chart `w = 1/z` through the reversed coefficient lists.
    pub fn eval(&self, z: Point) -> Point {
        let deg = self.degree();
        let coeff = |p: &[C64], k: usize| p.get(k).copied().unwrap_or(ZERO);
        let (top, bottom) = match z {
            Point::Infinity => (coeff(&self.num, deg), coeff(&self.den, deg)),
            Point::Finite(z) if z.norm() > 1.0 => {
                let w = z.inv();
                let rev = |p: &[C64]| (0..=deg).fold(ZERO, |acc, k| acc * w + coeff(p, k));
                (rev(&self.num), rev(&self.den))
            }
            Point::Finite(z) => {
                let horner = |p: &[C64]| p.iter().rev().fold(ZERO, |acc, &c| acc * z + c);
                (horner(&self.num), horner(&self.den))
            }
        };
        if bottom == ZERO {
            return Point::Infinity;
        }
        Point::from(top / bottom)
    }

    pub fn eval_c(&self, z: C64) -> Point {
        self.eval(Point::Finite(z))
    }

    /// Derivative `(N'D - ND')/D^2` at a finite point that is not a pole.
    pub fn derivative_at(&self, z: C64) -> C64 {
        let (n, dn) = self.num_poly().eval_with_derivative(z);
        let (d, dd) = self.den_poly().eval_with_derivative(z);
        (dn * d - n * dd) / (d * d)
    }

    /// `N'D - ND'`, whose roots are the finite critical points (and multiple poles).
    pub fn derivative_numerator(&self) -> Poly {
        let (n, d) = (self.num_poly(), self.den_poly());
        n.derivative().mul(&d).sub(&n.mul(&d.derivative()))
    }

    /// The value `R(∞)`.
    pub fn value_at_infinity(&self) -> Point {
        self.eval(Point::Infinity)
    }

    /// Local degree at infinity, computed in the chart `w = 1/z`.
    pub fn local_degree_at_infinity(&self) -> usize {
        let deg = self.degree();
        let rev = |p: &Poly| Poly((0..=deg).map(|k| p.coeff(deg - k)).collect());
        let (a, b) = (rev(&self.num_poly()), rev(&self.den_poly()));
        // R(1/w) = a(w)/b(w)
        if b.coeff(0).norm() <= 1e-14 * b.max_abs() {
            // ∞ ↦ ∞: chart map is b/a, local degree = order of b at 0
            b.order_at_zero(1e-12)
        } else {
            let v = a.coeff(0) / b.coeff(0);
            a.sub(&b.scale(v)).order_at_zero(1e-12)
        }
    }

    /// All critical points with local degrees; the sum of (local degree - 1)
    /// is 2D - 2.
    pub fn critical_points(&self) -> Result<Vec<CriticalPoint>> {
        let deg = self.degree();
        if deg < 2 {
            return Err(Error::InvalidMap("degree 1 maps have no critical points".into()));
        }
        let w = self.derivative_numerator().trimmed(1e-14);
        let mut out: Vec<CriticalPoint> = cluster_roots(&roots(&w)?, CLUSTER_RADIUS)
            .into_iter()
            .map(|c| CriticalPoint {
                point: Point::Finite(c.root),
                local_degree: c.multiplicity + 1,
            })
            .collect();
        let e = self.local_degree_at_infinity();
        if e >= 2 {
            out.push(CriticalPoint { point: Point::Infinity, local_degree: e });
        }
        Ok(out)
    }

    /// All preimages of `w`, counted with multiplicity (length = degree).
    pub fn preimages(&self, w: Point) -> Result<Vec<Point>> {
        let deg = self.degree();
        let (n, d) = (self.num_poly(), self.den_poly());
        let eq = match w {
            Point::Infinity => d.clone(),
            Point::Finite(w) => n.sub(&d.scale(w)),
        };
        let scale = eq.max_abs();
        // leading coefficients lost to cancellation mean preimages at ∞
        let mut top = deg;
        while top > 0 && eq.coeff(top).norm() <= 1e-13 * scale {
            top -= 1;
        }
        let reduced = Poly(eq.0[..=top.min(eq.0.len() - 1)].to_vec());
        let mut out: Vec<Point> = roots(&reduced)?.into_iter().map(Point::Finite).collect();
        // polish large roots in the reciprocal chart
        for p in out.iter_mut() {
            if let Point::Finite(z) = *p {
                if z.norm() > 1.0 {
                    *p = polish_reciprocal(&eq, deg, z);
                }
            }
        }
        while out.len() < deg {
            out.push(Point::Infinity);
        }
        Ok(out)
    }

    /// Conjugate by the scaling `z ↦ λz`: returns `λ⁻¹ R(λ z)`.
    pub fn conjugate_by_scaling(&self, lambda: C64) -> Result<Self> {
        let scale = |p: &[C64]| -> Vec<C64> {
            let mut pw = C64::new(1.0, 0.0);
            p.iter()
                .map(|&c| {
                    let v = c * pw;
                    pw *= lambda;
                    v
                })
                .collect()
        };
        let num = scale(&self.num);
        let den: Vec<C64> = scale(&self.den).into_iter().map(|c| c * lambda).collect();
        RationalMap::new(num, den)
    }

    /// Iterate `n` times.
    pub fn iterate(&self, z: Point, n: usize) -> Point {
        (0..n).fold(z, |p, _| self.eval(p))
    }
}

fn slice_degree(p: &[C64]) -> usize {
    p.iter().rposition(|c| *c != ZERO).unwrap_or(0)
}

fn polish_reciprocal(eq: &Poly, deg: usize, z: C64) -> Point {
    // roots of w^deg eq(1/w) near w0 = 1/z
    let rev = Poly((0..=deg).map(|k| eq.coeff(deg - k)).collect());
    let mut w = z.inv();
    for _ in 0..3 {
        let (v, dv) = rev.eval_with_derivative(w);
        if dv == ZERO {
            break;
        }
        let next = w - v / dv;
        if !(next.re.is_finite() && next.im.is_finite()) || rev.eval(next).norm() > v.norm() {
            break;
        }
        w = next;
    }
    if w == ZERO {
        Point::Infinity
    } else {
        Point::Finite(w.inv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cubic(a: C64) -> RationalMap {
        RationalMap::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), a]).unwrap()
    }

    #[test]
    fn square_of_one_plus_i() {
        let f = RationalMap::power(2);
        let v = f.eval_c(c(1.0, 1.0)).as_finite().unwrap();
        assert!((v - c(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn cubic_fixes_origin() {
        let f = cubic(c(0.7, -0.2));
        assert_eq!(f.eval_c(c(0.0, 0.0)), Point::finite(0.0, 0.0));
        assert_eq!(f.eval(Point::Infinity), Point::Infinity);
    }

    #[test]
    fn cubic_critical_points() {
        let a = c(0.5, 0.25);
        let f = cubic(a);
        let cps = f.critical_points().unwrap();
        let expect = -2.0 / (3.0 * a);
        let mut found_zero = false;
        let mut found_free = false;
        let mut found_inf = false;
        for cp in &cps {
            match cp.point {
                Point::Infinity => {
                    assert_eq!(cp.local_degree, 3);
                    found_inf = true
                }
                Point::Finite(z) if z.norm() < 1e-9 => {
                    assert_eq!(cp.local_degree, 2);
                    found_zero = true
                }
                Point::Finite(z) => {
                    assert!((z - expect).norm() < 1e-12);
                    assert_eq!(cp.local_degree, 2);
                    found_free = true
                }
            }
        }
        assert!(found_zero && found_free && found_inf);
    }

    #[test]
    fn power_map_critical_points() {
        for d in 2..6 {
            let cps = RationalMap::power(d).critical_points().unwrap();
            assert_eq!(cps.len(), 2);
            assert!(cps.iter().all(|c| c.local_degree == d));
        }
    }

    #[test]
    fn preimages_of_square() {
        let f = RationalMap::power(2);
        let mut p: Vec<f64> = f
            .preimages(Point::finite(4.0, 0.0))
            .unwrap()
            .iter()
            .map(|p| p.as_finite().unwrap().re)
            .collect();
        p.sort_by(f64::total_cmp);
        assert!((p[0] + 2.0).abs() < 1e-14 && (p[1] - 2.0).abs() < 1e-14);
        let z = f.preimages(Point::finite(0.0, 0.0)).unwrap();
        assert_eq!(z.len(), 2);
        assert!(z.iter().all(|p| p.as_finite().unwrap().norm() < 1e-12));
    }

    #[test]
    fn preimages_at_value_of_infinity() {
        // R(z) = (2z^2 + 1)/(z^2 + 3) has R(∞) = 2
        let r = RationalMap::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        let pre = r.preimages(Point::finite(2.0, 0.0)).unwrap();
        assert_eq!(pre.iter().filter(|p| p.is_infinite()).count(), 2);
    }

    #[test]
    fn rejects_common_roots() {
        // (z-1)z / (z-1)
        let e = RationalMap::new(vec![c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)], vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(e, Err(Error::InvalidMap(_))));
    }

    #[test]
    fn scaling_conjugacy() {
        let f = cubic(c(0.3, 0.1));
        let lam = c(0.5, 1.5);
        let g = f.conjugate_by_scaling(lam).unwrap();
        let z = c(0.2, -0.3);
        let lhs = g.eval_c(z).as_finite().unwrap();
        let rhs = f.eval_c(lam * z).as_finite().unwrap() / lam;
        assert!((lhs - rhs).norm() < 1e-14);
    }
}
