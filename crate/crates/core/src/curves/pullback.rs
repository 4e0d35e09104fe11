use super::PolygonalCurve;
use crate::error::{Error, Result};
use crate::geometry::distance_to_polygon;
use crate::rational::RationalMap;
use crate::sphere::{Point, C64};
use rayon::prelude::*;
use serde::Serialize;

/// Minimum distance between the curve and a critical value.
pub const CRITICAL_VALUE_MARGIN: f64 = 1e-6;
/// Preimages closer than this cannot be told apart.
const SEPARATION: f64 = 1e-7;
const MAX_SUBDIVISION: usize = 24;

/// A component of the preimage curve and the degree with which it covers
/// the base curve.
#[derive(Clone, Debug, Serialize)]
pub struct Lift {
    pub curve: PolygonalCurve,
    pub multiplicity: usize,
    /// `max |R(z_k) − w_k|` over lifted vertices.
    pub residual: f64,
}

fn finite_preimages(map: &RationalMap, w: C64) -> Result<Vec<C64>> {
    map.preimages(Point::Finite(w))?
        .into_iter()
        .map(|p| {
            let z = p.as_finite().ok_or_else(|| Error::LiftAmbiguous(format!("{w} has a preimage at infinity")))?;
            Ok(polish(map, z, w))
        })
        .collect()
}

fn polish(map: &RationalMap, mut z: C64, w: C64) -> C64 {
    for _ in 0..2 {
        let Point::Finite(v) = map.eval_c(z) else { return z };
        let d = map.derivative_at(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = (v - w) / d;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        z -= step;
    }
    z
}

/// Matches each current lift to its nearest preimage of the next base
/// point; `None` if the match is not a clear bijection.
fn match_lifts(current: &[C64], next: &[C64]) -> Option<Vec<C64>> {
    let mut used = vec![false; next.len()];
    let mut out = Vec::with_capacity(current.len());
    for &z in current {
        let mut d: Vec<(f64, usize)> = next.iter().enumerate().map(|(i, p)| ((p - z).norm(), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (d1, i) = d[0];
        let d2 = d.get(1).map_or(f64::INFINITY, |x| x.0);
        if used[i] || d1 * 3.0 >= d2 {
            return None;
        }
        used[i] = true;
        out.push(next[i]);
    }
    Some(out)
}

/// Lifts of the base edge `w0 → w1` from the lift states `from`, as a list
/// of successive states ending with preimages of `w1`.
fn lift_edge(map: &RationalMap, from: &[C64], w0: C64, w1: C64, pre1: Vec<C64>, depth: usize) -> Result<Vec<(C64, Vec<C64>)>> {
    if let Some(next) = match_lifts(from, &pre1) {
        return Ok(vec![(w1, next)]);
    }
    if depth >= MAX_SUBDIVISION {
        return Err(Error::LiftAmbiguous(format!("{w1}")));
    }
    let mid = (w0 + w1) / 2.0;
    let pre_mid = finite_preimages(map, mid)?;
    let mut first = lift_edge(map, from, w0, mid, pre_mid, depth + 1)?;
    let state = first.last().expect("non-empty").1.clone();
    first.extend(lift_edge(map, &state, mid, w1, pre1, depth + 1)?);
    Ok(first)
}

/// Full preimage of a closed curve, decomposed into closed components by
/// path lifting. Base edges are subdivided where the nearest-preimage
/// choice is not clear-cut.
pub fn pullback_curve(map: &RationalMap, curve: &PolygonalCurve) -> Result<Vec<Lift>> {
    let cps = map.critical_points()?;
    for c in &cps {
        if let Point::Finite(v) = map.eval(c.point) {
            let d = distance_to_polygon(&curve.vertices, v);
            if d < CRITICAL_VALUE_MARGIN {
                return Err(Error::Invalid(format!("curve passes within {d:e} of the critical value {v}")));
            }
        }
    }
    let base = &curve.vertices;
    let n = base.len();
    let pre: Vec<Vec<C64>> = base.par_iter().map(|&w| finite_preimages(map, w)).collect::<Result<_>>()?;
    let deg = pre[0].len();
    for p in &pre {
        for i in 0..p.len() {
            for j in 0..i {
                if (p[i] - p[j]).norm() < SEPARATION {
                    return Err(Error::LiftAmbiguous(format!("preimages {} and {} coincide", p[i], p[j])));
                }
            }
        }
    }
    // states[k] are the D lifts above the k-th (possibly refined) base point
    let mut points: Vec<(C64, Vec<C64>)> = vec![(base[0], pre[0].clone())];
    for k in 0..n {
        let (w0, w1) = (base[k], base[(k + 1) % n]);
        let from = points.last().expect("non-empty").1.clone();
        points.extend(lift_edge(map, &from, w0, w1, pre[(k + 1) % n].clone(), 0)?);
    }
    let closing = points.pop().expect("closing state").1;
    // lift l ends where lift perm[l] starts
    let perm: Vec<usize> = closing
        .iter()
        .map(|z| {
            (0..deg)
                .min_by(|&a, &b| (pre[0][a] - z).norm().total_cmp(&(pre[0][b] - z).norm()))
                .expect("degree ≥ 1")
        })
        .collect();
    let mut seen = vec![false; deg];
    let mut lifts = Vec::new();
    for start in 0..deg {
        if seen[start] {
            continue;
        }
        let (mut vertices, mut residual, mut mult, mut l) = (Vec::new(), 0.0f64, 0, start);
        while !seen[l] {
            seen[l] = true;
            mult += 1;
            for (w, state) in &points {
                let z = state[l];
                if let Point::Finite(v) = map.eval_c(z) {
                    residual = residual.max((v - w).norm());
                } else {
                    residual = f64::INFINITY;
                }
                vertices.push(z);
            }
            l = perm[l];
        }
        if l != start {
            return Err(Error::LiftAmbiguous("lifts do not close up into cycles".into()));
        }
        lifts.push(Lift { curve: PolygonalCurve::new(vertices)?, multiplicity: mult, residual });
    }
    Ok(lifts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(c: C64, r: f64, n: usize) -> PolygonalCurve {
        PolygonalCurve::new((0..n).map(|k| c + C64::from_polar(r, TAU * k as f64 / n as f64)).collect()).unwrap()
    }

    #[test]
    fn big_circle_lifts_to_one_component() {
        let lifts = pullback_curve(&RationalMap::power(2), &circle(C64::new(0.0, 0.0), 4.0, 128)).unwrap();
        assert_eq!(lifts.len(), 1);
        assert_eq!(lifts[0].multiplicity, 2);
        for z in &lifts[0].curve.vertices {
            assert!((z.norm() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn small_circle_lifts_to_two_components() {
        let w0 = C64::new(1.0, 1.0);
        let lifts = pullback_curve(&RationalMap::power(2), &circle(w0, 0.1, 64)).unwrap();
        assert_eq!(lifts.len(), 2);
        let r = w0.sqrt();
        for l in &lifts {
            assert_eq!(l.multiplicity, 1);
            assert!(l.curve.encloses(r) ^ l.curve.encloses(-r));
            assert!(l.residual < 1e-12);
        }
    }

    #[test]
    fn curve_through_critical_value_rejected() {
        assert!(pullback_curve(&RationalMap::power(2), &circle(C64::new(1.0, 0.0), 1.0, 64)).is_err());
    }
}
