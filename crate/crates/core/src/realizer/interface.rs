//! The invariant interface curve of a realized mating: the image of the
//! glued circle, found as the fixed point of curve pullback `T ← R⁻¹(T∘d0)`.

use crate::error::{Error, Result};
use crate::geometry::{self_intersections, winding_number};
use crate::rational::RationalMap;
use crate::sphere::{Point, C64};
use serde::Serialize;
use std::f64::consts::TAU;

/// Sampled invariant curve; `points[j]` sits at model angle `j/n` and
/// `R(points[j]) ≈ points[d0·j mod n]`.
#[derive(Clone, Debug, Serialize)]
pub struct Interface {
    pub d0: usize,
    pub points: Vec<C64>,
    pub iterations: usize,
    /// Largest sample displacement in the final pullback step.
    pub displacement: f64,
    /// Largest `|R(T(θ)) − T(d0·θ)|`.
    pub invariance_defect: f64,
}

impl Interface {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn angle(&self, j: usize) -> f64 {
        j as f64 / self.points.len() as f64
    }

    /// Point at an arbitrary model angle (linear interpolation).
    pub fn at(&self, theta: f64) -> C64 {
        let n = self.points.len();
        let x = theta.rem_euclid(1.0) * n as f64;
        let j = x.floor() as usize % n;
        let t = x - x.floor();
        self.points[j] * (1.0 - t) + self.points[(j + 1) % n] * t
    }

    /// Model angle of the sample nearest to `z`, with its distance.
    pub fn nearest_angle(&self, z: C64) -> (f64, f64) {
        let (j, d) = self
            .points
            .iter()
            .enumerate()
            .map(|(j, p)| (j, (p - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        (self.angle(j), d)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Initial curve through `anchors` (model angle, position): log-polar
/// interpolation, which requires the anchors to wind once counterclockwise
/// around 0 in angle order.
fn initial_curve(anchors: &[(f64, C64)], n: usize) -> Result<Vec<C64>> {
    if anchors.is_empty() {
        return Ok((0..n).map(|j| C64::from_polar(1.0, TAU * j as f64 / n as f64)).collect());
    }
    let mut a: Vec<(f64, C64)> = anchors.to_vec();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut args = vec![a[0].1.arg()];
    for k in 1..a.len() {
        let prev = *args.last().unwrap();
        args.push(prev + (a[k].1.arg() - prev).rem_euclid(TAU));
    }
    let close = args.last().unwrap() + (a[0].1.arg() - args.last().unwrap()).rem_euclid(TAU);
    let close = if a.len() == 1 || close - args[0] < 1e-12 { args[0] + TAU } else { close };
    if (close - args[0] - TAU).abs() > 1e-9 {
        return Err(Error::NotJordanAtResolution { intersections: 0 });
    }
    let mut knots: Vec<(f64, f64, f64)> = a
        .iter()
        .zip(&args)
        .map(|((t, z), arg)| (*t, z.norm().ln(), *arg))
        .collect();
    knots.push((a[0].0 + 1.0, a[0].1.norm().ln(), close));
    Ok((0..n)
        .map(|j| {
            let mut t = j as f64 / n as f64;
            if t < knots[0].0 {
                t += 1.0;
            }
            let k = knots.windows(2).position(|w| t >= w[0].0 && t <= w[1].0).unwrap_or(0);
            let (t0, l0, a0) = knots[k];
            let (t1, l1, a1) = knots[k + 1];
            let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            C64::from_polar((l0 + s * (l1 - l0)).exp(), a0 + s * (a1 - a0))
        })
        .collect())
}

/// Pulls back the initial curve through `anchors` until the sample
/// displacement drops below `tol` or `max_iter` steps are taken. The sample
/// count is rounded up so every anchor angle `num/den` is a sample.
pub fn pull_back_interface(
    map: &RationalMap,
    d0: usize,
    anchors: &[((u64, u64), C64)],
    n: usize,
    max_iter: usize,
    tol: f64,
) -> Result<Interface> {
    let step = anchors.iter().fold(1usize, |l, ((_, den), _)| lcm(l, *den as usize));
    let n = n.div_ceil(step) * step;
    let float_anchors: Vec<(f64, C64)> = anchors.iter().map(|((a, b), z)| (*a as f64 / *b as f64, *z)).collect();
    let mut t = initial_curve(&float_anchors, n)?;
    let mut displacement = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..max_iter {
        let mut next = Vec::with_capacity(n);
        for j in 0..n {
            let w = t[(d0 * j) % n];
            let pre = map.preimages(Point::Finite(w))?;
            let best = pre
                .iter()
                .filter_map(|p| p.as_finite())
                .min_by(|a, b| (a - t[j]).norm().total_cmp(&(b - t[j]).norm()))
                .ok_or_else(|| Error::LiftAmbiguous(format!("{w}")))?;
            next.push(best);
        }
        displacement = next.iter().zip(&t).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        t = next;
        iterations = it + 1;
        if displacement < tol {
            break;
        }
    }
    let invariance_defect = (0..n)
        .map(|j| match map.eval_c(t[j]) {
            Point::Finite(w) => (w - t[(d0 * j) % n]).norm(),
            Point::Infinity => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    Ok(Interface { d0, points: t, iterations, displacement, invariance_defect })
}

/// A portrait node on the interface: its circle-model angle, realized
/// position and the local degrees contributed by the `f` and `g` sides.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InterfaceAnchor {
    pub angle: (u64, u64),
    pub point: C64,
    pub f_degree: usize,
    pub g_degree: usize,
}

/// Outcome of the interface test that singles out the mating among the
/// maps realizing the merged portrait.
#[derive(Clone, Debug, Serialize)]
pub struct InterfaceCheck {
    pub anchors_ordered: bool,
    pub self_intersections: usize,
    pub poles_inside: usize,
    pub expected_poles_inside: usize,
    pub zeros_outside: usize,
    pub expected_zeros_outside: usize,
    pub displacement: f64,
    /// For glued critical points with unequal side degrees: the fraction of a
    /// small circle around the point lying inside the interface, and whether
    /// it falls on the side that carries the larger local degree.
    pub corner_fractions: Vec<(f64, bool)>,
    pub jordan_interface: bool,
}

/// Tests whether `map` (normalized with the `g`-anchor at 0 and the
/// `f`-anchor at ∞) has a simple invariant interface through the anchors on
/// which its poles and zeros sit on the sides the gluing dictates:
/// `d_g − d0` poles inside and `d_f − d0` further zeros outside.
///
/// At a glued critical point with side degrees `e_f`, `e_g`, the outside
/// holds `2e_f − 1` of the `2(e_f + e_g − 1)` local sectors cut out by
/// `R⁻¹(T)`, so the inside fraction is below ½ exactly when `e_f > e_g`;
/// this separates the mating from realizations with the sides exchanged.
pub fn check_interface(
    map: &RationalMap,
    d0: usize,
    anchors: &[InterfaceAnchor],
    degrees: (usize, usize),
    n: usize,
    max_iter: usize,
) -> (InterfaceCheck, Option<Interface>) {
    let expected_poles_inside = degrees.1 - d0;
    let expected_zeros_outside = degrees.0 - d0;
    let mut check = InterfaceCheck {
        anchors_ordered: false,
        self_intersections: 0,
        poles_inside: 0,
        expected_poles_inside,
        zeros_outside: 0,
        expected_zeros_outside,
        displacement: f64::INFINITY,
        corner_fractions: Vec::new(),
        jordan_interface: false,
    };
    let plain: Vec<((u64, u64), C64)> = anchors.iter().map(|a| (a.angle, a.point)).collect();
    let iface = match pull_back_interface(map, d0, &plain, n, max_iter, 1e-10) {
        Ok(i) => i,
        Err(_) => return (check, None),
    };
    check.anchors_ordered = true;
    check.displacement = iface.displacement;
    check.self_intersections = self_intersections(&iface.points);
    let count = |p: &crate::poly::Poly, inside: bool| -> usize {
        crate::poly::roots(p)
            .map(|rs| {
                rs.iter()
                    .filter(|z| z.norm() > 1e-9)
                    .filter(|z| (winding_number(&iface.points, **z) != 0) == inside)
                    .count()
            })
            .unwrap_or(usize::MAX)
    };
    let den = map.den_poly();
    check.poles_inside = if den.degree() == 0 { 0 } else { count(&den, true) };
    let num = map.num_poly();
    check.zeros_outside = count(&num, false);
    for a in anchors.iter().filter(|a| a.f_degree != a.g_degree) {
        let others = anchors
            .iter()
            .map(|b| b.point)
            .chain([C64::new(0.0, 0.0)])
            .filter(|p| (p - a.point).norm() > 1e-9)
            .map(|p| (p - a.point).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = 0.3 * others.min(a.point.norm().max(1e-3));
        let m = 720;
        let inside = (0..m)
            .filter(|&i| {
                let z = a.point + C64::from_polar(radius, TAU * (i as f64 + 0.5) / m as f64);
                winding_number(&iface.points, z) != 0
            })
            .count();
        let frac = inside as f64 / m as f64;
        let ok = if a.f_degree > a.g_degree { frac < 0.5 } else { frac > 0.5 };
        check.corner_fractions.push((frac, ok));
    }
    check.jordan_interface = check.corner_fractions.iter().all(|c| c.1)
        && check.self_intersections == 0
        && check.poles_inside == expected_poles_inside
        && check.zeros_outside == expected_zeros_outside
        && iface.displacement < 1e-2;
    (check, Some(iface))
}
