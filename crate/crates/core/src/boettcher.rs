//! Böttcher coordinates on a marked superattracting basin.
//!
//! Around a finite superattracting fixed point `c` of local degree `d0` the
//! map is written in centred form `F(w) = λ w^d0 u(w)` with `u(0) = 1`. The
//! coordinate is
//!
//! ```text
//! φ(c + w) = μ w ∏_{n≥0} u(w_n)^{1/d0^{n+1}},   μ^{d0-1} = λ,
//! ```
//!
//! where `w_n` is the centred orbit. `log u` is taken on the holomorphic
//! branch with `log u(0) = 0`: principal near the centre and continued along
//! the segment from the centre otherwise.

use crate::error::{Error, Result};
use crate::geometry::{self_intersections, signed_area};
use crate::poly::{roots, Poly};
use crate::rational::RationalMap;
use crate::sphere::{Point, C64};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Iterations allowed for the basin membership test.
pub const BASIN_ITERATIONS: usize = 200;
/// Distance to the centre that counts as captured.
pub const BASIN_CAPTURE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct BoettcherChart {
    pub map: RationalMap,
    pub center: C64,
    pub d0: usize,
    /// Leading coefficient λ of the centred map.
    pub lead: C64,
    /// The chosen (d0-1)-th root μ of λ.
    pub root: C64,
    /// Which root was chosen: μ = principal · e^{2πi·root_index/(d0-1)}.
    pub root_index: usize,
    a: Poly,
    b: Poly,
    da: Poly,
    db: Poly,
    r_safe: f64,
}

/// Sampled ε-approximation of the basin boundary.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryParametrization {
    pub angles: Vec<f64>,
    pub points: Vec<C64>,
    pub epsilon: f64,
}

impl BoettcherChart {
    /// Chart for the superattracting fixed point `center` of local degree `d0`.
    pub fn new(map: &RationalMap, center: C64, d0: usize) -> Result<Self> {
        Self::with_root_index(map, center, d0, 0)
    }

    pub fn with_root_index(map: &RationalMap, center: C64, d0: usize, root_index: usize) -> Result<Self> {
        if d0 < 2 {
            return Err(Error::InvalidMap("local degree at the centre must be at least 2".into()));
        }
        let (n, d) = (map.num_poly(), map.den_poly());
        let dc = d.eval(center);
        if dc.norm() < 1e-12 {
            return Err(Error::InvalidMap("centre is a pole".into()));
        }
        // centred numerator P(w) = N(c+w) - c·D(c+w)
        let b = d.taylor_shift(center);
        let p = n.taylor_shift(center).sub(&b.scale(center));
        let scale = p.max_abs().max(b.max_abs());
        for k in 0..d0 {
            if p.coeff(k).norm() > 1e-9 * scale {
                return Err(Error::InvalidMap(format!(
                    "centre is not a superattracting fixed point of local degree {d0} (coefficient {k} = {:e})",
                    p.coeff(k).norm()
                )));
            }
        }
        let a = Poly(p.0.get(d0..).map(|s| s.to_vec()).unwrap_or_default());
        if a.0.is_empty() || a.coeff(0).norm() <= 1e-12 * scale {
            return Err(Error::InvalidMap(format!("local degree at the centre exceeds {d0}")));
        }
        let lead = a.coeff(0) / b.coeff(0);
        let m = (d0 - 1) as f64;
        let principal = C64::from_polar(lead.norm().powf(1.0 / m), lead.arg() / m);
        let root = principal * C64::from_polar(1.0, TAU * root_index as f64 / m);

        let mut chart = BoettcherChart {
            map: map.clone(),
            center,
            d0,
            lead,
            root,
            root_index,
            da: a.derivative(),
            db: b.derivative(),
            a,
            b,
            r_safe: 0.0,
        };
        chart.r_safe = chart.safe_radius()?;
        Ok(chart)
    }

    /// Radius inside which `|u - 1| < 1/2`, so the principal logarithm is the
    /// holomorphic branch there.
    fn safe_radius(&self) -> Result<f64> {
        let mut singular = f64::INFINITY;
        for p in [&self.a, &self.b] {
            if p.degree() > 0 {
                for r in roots(p)? {
                    singular = singular.min(r.norm());
                }
            }
        }
        let mut r = (0.5 * singular).min(1.0);
        for _ in 0..60 {
            let ok = (0..128).all(|k| {
                let w = C64::from_polar(r, TAU * k as f64 / 128.0);
                (self.u(w) - ONE).norm() < 0.5
            });
            if ok {
                return Ok(r);
            }
            r *= 0.5;
        }
        Err(Error::InvalidMap("could not find a linearizable core".into()))
    }

    fn u(&self, w: C64) -> C64 {
        self.a.eval(w) / (self.lead * self.b.eval(w))
    }

    /// `u'/u` at `w`.
    fn log_u_derivative(&self, w: C64) -> C64 {
        let (av, bv) = (self.a.eval(w), self.b.eval(w));
        self.da.eval(w) / av - self.db.eval(w) / bv
    }

    /// Centred map and its derivative.
    fn centred(&self, w: C64) -> (C64, C64) {
        let d = self.d0 as i32;
        let (av, bv) = (self.a.eval(w), self.b.eval(w));
        let (dav, dbv) = (self.da.eval(w), self.db.eval(w));
        let wd1 = w.powi(d - 1);
        let val = wd1 * w * av / bv;
        let der = (self.d0 as f64) * wd1 * av / bv + wd1 * w * (dav * bv - av * dbv) / (bv * bv);
        (val, der)
    }

    /// Holomorphic `log u(w)`, continued from the centre along the segment.
    fn log_u(&self, w: C64) -> Result<C64> {
        let wn = w.norm();
        if wn <= self.r_safe {
            return Ok(self.u(w).ln());
        }
        let start = w * (0.99 * self.r_safe / wn);
        let mut acc = self.u(start).ln();
        let mut prev = self.u(start);
        let (mut t, mut h) = (0.0f64, 1.0f64 / 16.0);
        while t < 1.0 {
            let tn = (t + h).min(1.0);
            let pt = start + (w - start) * tn;
            let cur = self.u(pt);
            if cur == ZERO || !cur.re.is_finite() {
                return Err(Error::PrecisionLoss { residual: f64::INFINITY });
            }
            let inc = (cur / prev).ln();
            if inc.im.abs() > 0.5 || inc.re.abs() > 0.5 {
                h *= 0.5;
                if h < 1e-10 {
                    return Err(Error::PrecisionLoss { residual: inc.norm() });
                }
                continue;
            }
            acc += inc;
            prev = cur;
            t = tn;
            h = (h * 1.5).min(0.25);
        }
        Ok(acc)
    }

    /// Whether the forward orbit of `z` is captured by the centre within
    /// [`BASIN_ITERATIONS`] steps.
    pub fn in_basin(&self, z: Point) -> bool {
        let Point::Finite(z) = z else { return false };
        let mut w = z - self.center;
        for _ in 0..BASIN_ITERATIONS {
            if w.norm() < BASIN_CAPTURE {
                return true;
            }
            let next = self.centred(w).0;
            if !(next.re.is_finite() && next.im.is_finite()) || next.norm() > 1e12 {
                return false;
            }
            w = next;
        }
        w.norm() < BASIN_CAPTURE
    }

    /// `φ(z)` and `φ'(z)`.
    pub fn value_and_derivative(&self, z: C64) -> Result<(C64, C64)> {
        let w0 = z - self.center;
        if w0 == ZERO {
            return Ok((ZERO, self.root));
        }
        let d = self.d0 as f64;
        let mut w = w0;
        let mut s = ZERO;
        let mut sp = ZERO;
        let mut dw = ONE;
        let mut pow = d;
        let mut captured = false;
        for n in 0..(BASIN_ITERATIONS + 64) {
            if !(w.re.is_finite() && w.im.is_finite()) || w.norm() > 1e12 {
                return Err(Error::OutsideBasin);
            }
            if w == ZERO {
                captured = true;
                break;
            }
            if n >= BASIN_ITERATIONS && w.norm() >= BASIN_CAPTURE {
                return Err(Error::OutsideBasin);
            }
            let lu = self.log_u(w)?;
            s += lu / pow;
            sp += self.log_u_derivative(w) * dw / pow;
            if w.norm() < self.r_safe && lu.norm() / pow < 1e-18 {
                captured = true;
                break;
            }
            let (next, der) = self.centred(w);
            dw *= der;
            w = next;
            pow *= d;
        }
        if !captured {
            return Err(Error::OutsideBasin);
        }
        let e = s.exp();
        let phi = self.root * w0 * e;
        let dphi = self.root * e * (ONE + w0 * sp);
        Ok((phi, dphi))
    }

    /// Böttcher coordinate `φ(z)`.
    pub fn value(&self, z: Point) -> Result<C64> {
        match z {
            Point::Infinity => Err(Error::OutsideBasin),
            Point::Finite(z) => Ok(self.value_and_derivative(z)?.0),
        }
    }

    /// Functional-equation residual `|φ(f(z)) - φ(z)^d0|`.
    pub fn functional_residual(&self, z: C64) -> Result<f64> {
        let phi = self.value(Point::Finite(z))?;
        let fz = self.map.eval_c(z);
        let phi_f = self.value(fz)?;
        Ok((phi_f - phi.powi(self.d0 as i32)).norm())
    }

    fn newton_to(&self, mut z: C64, target: C64, max_iter: usize) -> Result<(C64, f64)> {
        let (mut phi, mut dphi) = self.value_and_derivative(z)?;
        let mut res = (phi - target).norm();
        for _ in 0..max_iter {
            if res < 1e-14 {
                break;
            }
            if dphi == ZERO {
                break;
            }
            let step = (phi - target) / dphi;
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..12 {
                let cand = z - step * t;
                if let Ok((p, dp)) = self.value_and_derivative(cand) {
                    let r = (p - target).norm();
                    if r < res {
                        z = cand;
                        phi = p;
                        dphi = dp;
                        res = r;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Ok((z, res))
    }

    /// `φ⁻¹(target)` for `|target| < 1`, by Newton continuation along the
    /// radius from the centre.
    pub fn inverse(&self, target: C64) -> Result<C64> {
        let rho = target.norm();
        if rho >= 1.0 {
            return Err(Error::OutsideBasin);
        }
        if rho == 0.0 {
            return Ok(self.center);
        }
        let dir = target / rho;
        let rho0 = rho.min(0.25 * self.root.norm() * self.r_safe).min(0.5);
        let mut z = self.center + dir * rho0 / self.root;
        let (z0, r0) = self.newton_to(z, dir * rho0, 40)?;
        if r0 > 1e-10 {
            return Err(Error::PrecisionLoss { residual: r0 });
        }
        z = z0;
        let mut s = rho0.atanh();
        let s_target = rho.atanh();
        let mut ds: f64 = 0.3;
        while s < s_target {
            let sn = (s + ds).min(s_target);
            let goal = dir * sn.tanh();
            match self.newton_to(z, goal, 25) {
                Ok((zn, r)) if r < 1e-11 && (zn - z).norm() < 0.5 * (1.0 + (z - self.center).norm()) => {
                    z = zn;
                    s = sn;
                    ds = (ds * 1.5).min(0.6);
                }
                _ => {
                    ds *= 0.5;
                    if ds < 1e-7 {
                        return Err(Error::PrecisionLoss { residual: 1.0 - s.tanh() });
                    }
                }
            }
        }
        let (zf, rf) = self.newton_to(z, target, 10)?;
        if rf > 1e-9 {
            return Err(Error::PrecisionLoss { residual: rf });
        }
        Ok(zf)
    }

    /// Whether `z` lies in the immediate basin: the radial inverse of its
    /// coordinate returns to it.
    pub fn in_immediate_basin(&self, z: C64) -> bool {
        match self.value(Point::Finite(z)) {
            Ok(w) if w.norm() < 1.0 => match self.inverse(w) {
                Ok(back) => (back - z).norm() < 1e-7 * (1.0 + z.norm()),
                Err(_) => false,
            },
            _ => false,
        }
    }

    /// Point on the internal ray of angle `theta` (in turns) at coordinate
    /// radius `1 - epsilon`.
    pub fn ray_point(&self, theta: f64, epsilon: f64) -> Result<C64> {
        self.inverse(C64::from_polar(1.0 - epsilon, TAU * theta))
    }

    /// `points[j] = φ⁻¹((1-ε) e^{2πi j/n})`, checked for simplicity.
    pub fn boundary_parametrization(&self, n: usize, epsilon: f64) -> Result<BoundaryParametrization> {
        if n < 4 {
            return Err(Error::Invalid(format!("need at least 4 samples, got {n}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1e-3) {
            return Err(Error::Invalid(format!("epsilon {epsilon} outside (0, 1e-3]")));
        }
        let angles: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
        let points = angles
            .par_iter()
            .map(|&t| self.ray_point(t, epsilon))
            .collect::<Result<Vec<_>>>()?;
        let crossings = self_intersections(&points);
        if crossings > 0 || signed_area(&points) <= 0.0 {
            return Err(Error::NotJordanAtResolution { intersections: crossings });
        }
        Ok(BoundaryParametrization { angles, points, epsilon })
    }

    /// Angle (as a reduced fraction `num/den` of a turn) of a boundary point
    /// whose orbit has the given preperiod and period, or `None` when no
    /// candidate ray lands at it.
    pub fn boundary_angle(&self, x: C64, preperiod: usize, period: usize) -> Option<(u64, u64)> {
        let d = self.d0 as u64;
        let den = d.checked_pow(preperiod as u32)?.checked_mul(d.checked_pow(period as u32)? - 1)?;
        if den == 0 || den > 1 << 14 {
            return None;
        }
        let landing_eps = 1e-8;
        let mut best: Option<(f64, u64)> = None;
        for j in 0..den {
            let theta = j as f64 / den as f64;
            if let Ok(p) = self.ray_point(theta, landing_eps) {
                let dist = (p - x).norm();
                if best.is_none_or(|(bd, _)| dist < bd) {
                    best = Some((dist, j));
                }
            }
        }
        let (dist, j) = best?;
        let scale = 1.0 + (x - self.center).norm();
        if dist > 1e-3 * scale {
            return None;
        }
        let g = gcd(j, den);
        Some((j / g, den / g))
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cubic(a: C64) -> RationalMap {
        RationalMap::polynomial(vec![ZERO, ZERO, ONE, a]).unwrap()
    }

    #[test]
    fn identity_chart_for_square() {
        let ch = BoettcherChart::new(&RationalMap::power(2), ZERO, 2).unwrap();
        let v = ch.value(Point::finite(0.5, 0.0)).unwrap();
        assert!((v - c(0.5, 0.0)).norm() < 1e-15);
        let z = ch.inverse(c(0.3, 0.4)).unwrap();
        assert!((z - c(0.3, 0.4)).norm() < 1e-12);
    }

    #[test]
    fn scaled_square_chart() {
        let map = RationalMap::polynomial(vec![ZERO, ZERO, c(4.0, 0.0)]).unwrap();
        let ch = BoettcherChart::new(&map, ZERO, 2).unwrap();
        assert!((ch.value(Point::finite(0.1, 0.0)).unwrap() - c(0.4, 0.0)).norm() < 1e-14);
        assert!((ch.inverse(c(0.4, 0.0)).unwrap() - c(0.1, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn rejects_non_superattracting_centre() {
        let map = RationalMap::polynomial(vec![ZERO, c(0.5, 0.0), ONE]).unwrap();
        assert!(BoettcherChart::new(&map, ZERO, 2).is_err());
    }

    #[test]
    fn outside_basin_is_reported() {
        let ch = BoettcherChart::new(&RationalMap::power(2), ZERO, 2).unwrap();
        assert_eq!(ch.value(Point::finite(1.5, 0.0)), Err(Error::OutsideBasin));
    }

    #[test]
    fn cubic_functional_equation_and_round_trip() {
        let ch = BoettcherChart::new(&cubic(c(4.0 / 9.0, 0.0)), ZERO, 2).unwrap();
        for k in 0..20 {
            let w = C64::from_polar(0.05 * k as f64 % 0.97, 0.7 * k as f64);
            let z = ch.inverse(w).unwrap();
            assert!((ch.value(Point::Finite(z)).unwrap() - w).norm() < 1e-9);
            assert!(ch.functional_residual(z).unwrap() < 1e-8);
        }
    }

    #[test]
    fn square_boundary_samples() {
        let ch = BoettcherChart::new(&RationalMap::power(2), ZERO, 2).unwrap();
        let b = ch.boundary_parametrization(4, 1e-4).unwrap();
        for (t, p) in b.angles.iter().zip(&b.points) {
            assert!((p - C64::from_polar(0.9999, TAU * t)).norm() < 1e-12);
        }
    }

    #[test]
    fn cubic_boundary_angles() {
        // f = z^2 + 4/9 z^3: critical point -3/2 at angle 1/2 maps to the fixed point 3/4 at angle 0
        let ch = BoettcherChart::new(&cubic(c(4.0 / 9.0, 0.0)), ZERO, 2).unwrap();
        assert_eq!(ch.boundary_angle(c(0.75, 0.0), 0, 1), Some((0, 1)));
        assert_eq!(ch.boundary_angle(c(-1.5, 0.0), 1, 1), Some((1, 2)));
        assert_eq!(ch.boundary_angle(c(0.3, 0.0), 0, 1), None);
    }
}
