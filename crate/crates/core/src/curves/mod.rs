//! Curve combinatorics in the circle model: closed polygonal curves cut by
//! the glued circle `T` into outside (type P) and inside (type R) segments,
//! the regions `D(σ)`, the counts `N(Σ_x)` and `K`, the curve classes, curve
//! pullback and the lemma harnesses.

mod harness;
mod pullback;

pub use harness::{
    eventual_periodicity_bound, random_nonperipheral_curves, run_lemma_harness, CurveReport, EvObservation,
    HarnessReport, OoRow, OoStatus,
};
pub use pullback::{pullback_curve, Lift};

use crate::error::{Error, Result};
use crate::geometry::{distance_to_polygon, orient, self_intersections, winding_number};
use crate::realizer::Interface;
use crate::sphere::{Point, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt::Write as _;

/// Distance below which a marked point counts as sitting on a region
/// boundary.
pub const MEMBERSHIP_MARGIN: f64 = 1e-9;
/// Radial push applied to curve vertices lying on `T`.
pub const TRANSVERSAL_PUSH: f64 = 1e-9;

/// The glued circle `T`: a closed polygon whose vertex `j` sits at circle
/// angle `j/n`, winding once counterclockwise around the puncture `origin`
/// (the point of `ℂ*` removed inside `T`; the other puncture is ∞).
#[derive(Clone, Debug, Serialize)]
pub struct Circle {
    pub points: Vec<C64>,
    pub origin: C64,
}

impl Circle {
    pub fn unit(n: usize) -> Self {
        Circle {
            points: (0..n).map(|j| C64::from_polar(1.0, TAU * j as f64 / n as f64)).collect(),
            origin: C64::new(0.0, 0.0),
        }
    }

    /// The invariant interface of a realized mating, punctured at 0.
    pub fn from_interface(iface: &Interface) -> Self {
        Circle { points: iface.points.clone(), origin: C64::new(0.0, 0.0) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point at circle angle `theta` (turns), linearly interpolated.
    pub fn at(&self, theta: f64) -> C64 {
        let n = self.points.len();
        let x = theta.rem_euclid(1.0) * n as f64;
        let j = x.floor() as usize % n;
        let t = x - x.floor();
        self.points[j] * (1.0 - t) + self.points[(j + 1) % n] * t
    }

    /// Strictly inside `T` (the `R` side).
    pub fn inside(&self, z: C64) -> bool {
        winding_number(&self.points, z) != 0
    }
}

/// Closed simple polygon in the plane of the circle model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonalCurve {
    pub vertices: Vec<C64>,
}

impl PolygonalCurve {
    pub fn new(vertices: Vec<C64>) -> Result<Self> {
        if vertices.len() < 3 || vertices.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invalid(format!("a closed curve needs at least 3 finite vertices, got {}", vertices.len())));
        }
        let crossings = self_intersections(&vertices);
        if crossings > 0 {
            return Err(Error::NotJordanAtResolution { intersections: crossings });
        }
        Ok(PolygonalCurve { vertices })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Whether every crossing with `T` is transversal as given, i.e. no
    /// vertex needs pushing off `T` before cutting.
    pub fn transversal(&self, circle: &Circle) -> bool {
        self.vertices.iter().all(|&z| distance_to_polygon(&circle.points, z) >= TRANSVERSAL_PUSH)
    }

    /// Strictly enclosed by the curve.
    pub fn encloses(&self, z: C64) -> bool {
        winding_number(&self.vertices, z) != 0
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for z in &self.vertices {
            let _ = writeln!(out, "{:.17e},{:.17e}", z.re, z.im);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with(|c: char| c.is_ascii_alphabetic())) {
                continue;
            }
            let mut parts = line.split(',');
            let mut field = |col: usize| -> Result<f64> {
                let s = parts.next().ok_or_else(|| Error::Parse {
                    line: i + 1,
                    column: col,
                    message: "expected two comma-separated numbers".into(),
                })?;
                s.trim().parse::<f64>().map_err(|e| Error::Parse { line: i + 1, column: col, message: e.to_string() })
            };
            let x = field(1)?;
            let y = field(line.find(',').map_or(1, |p| p + 2))?;
            vertices.push(C64::new(x, y));
        }
        PolygonalCurve::new(vertices)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SegmentType {
    /// Outside `T` (polynomial side).
    P,
    /// Inside `T` (rational side).
    R,
}

/// One component of `γ ∖ T`, with its chord `I ⊂ T` and region `D(σ)`.
#[derive(Clone, Debug, Serialize)]
pub struct TypedSegment {
    /// Vertices from the first crossing to the second, both on `T`.
    pub arc: Vec<C64>,
    pub kind: SegmentType,
    pub start_angle: f64,
    pub end_angle: f64,
    /// Direction in which the chord runs from `end_angle` back to
    /// `start_angle`.
    pub chord_ccw: bool,
    /// `arc` followed by the chord: the boundary of `D(σ)`.
    pub region: Vec<C64>,
}

impl TypedSegment {
    /// Whether circle angle `alpha` lies in the open chord.
    pub fn chord_contains(&self, alpha: f64) -> bool {
        let (a, b) = (self.start_angle, self.end_angle);
        if self.chord_ccw {
            let t = (alpha - b).rem_euclid(1.0);
            t > 0.0 && t < (a - b).rem_euclid(1.0)
        } else {
            let t = (b - alpha).rem_euclid(1.0);
            t > 0.0 && t < (b - a).rem_euclid(1.0)
        }
    }

    /// `x ∈ D(σ)`. Points on `T` are decided by their circle angle (the
    /// chord belongs to the region); others by winding number.
    pub fn region_contains(&self, x: &MarkedPoint) -> Result<bool> {
        let Point::Finite(z) = x.point else { return Ok(false) };
        if let Some(alpha) = x.circle_angle {
            let d = (z - self.arc[0]).norm().min((z - self.arc[self.arc.len() - 1]).norm());
            if d < MEMBERSHIP_MARGIN {
                return Err(Error::AmbiguousMembership { distance: d });
            }
            return Ok(self.chord_contains(alpha));
        }
        let d = distance_to_polygon(&self.region, z);
        if d < MEMBERSHIP_MARGIN {
            return Err(Error::AmbiguousMembership { distance: d });
        }
        Ok(winding_number(&self.region, z) != 0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Segmentation {
    pub segments: Vec<TypedSegment>,
    /// Number of type-P segments.
    pub k: usize,
    /// Vertices pushed off `T` before cutting.
    pub perturbed: usize,
}

#[derive(Clone, Copy, Debug)]
struct Crossing {
    edge: usize,
    s: f64,
    angle: f64,
    point: C64,
}

/// Crossing of curve edge `[p, q]` with circle edge `[a, b]`, half-open on
/// the circle edge so a crossing through a circle vertex is counted once.
fn cross_edges(p: C64, q: C64, a: C64, b: C64) -> Option<(f64, f64)> {
    let (r, e) = (q - p, b - a);
    let den = r.re * e.im - r.im * e.re;
    if den == 0.0 {
        return None;
    }
    let ap = a - p;
    let s = (ap.re * e.im - ap.im * e.re) / den;
    let u = (ap.re * r.im - ap.im * r.re) / den;
    ((0.0..1.0).contains(&s) && (0.0..1.0).contains(&u)).then_some((s, u))
}

/// Cuts the curve along `T`. Vertices within `TRANSVERSAL_PUSH` of `T` are
/// pushed radially away from the puncture first.
pub fn segment_curve(curve: &PolygonalCurve, circle: &Circle) -> Result<Segmentation> {
    let nt = circle.len();
    let mut v = curve.vertices.clone();
    let mut perturbed = 0;
    for z in v.iter_mut() {
        if distance_to_polygon(&circle.points, *z) < TRANSVERSAL_PUSH {
            *z = circle.origin + (*z - circle.origin) * (1.0 + TRANSVERSAL_PUSH);
            perturbed += 1;
        }
    }
    let n = v.len();
    let tbox: Vec<(f64, f64, f64, f64)> = (0..nt)
        .map(|j| {
            let (a, b) = (circle.points[j], circle.points[(j + 1) % nt]);
            (a.re.min(b.re), a.re.max(b.re), a.im.min(b.im), a.im.max(b.im))
        })
        .collect();
    let mut crossings = Vec::new();
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        let (x0, x1, y0, y1) = (p.re.min(q.re), p.re.max(q.re), p.im.min(q.im), p.im.max(q.im));
        for j in 0..nt {
            let bb = tbox[j];
            if bb.1 < x0 || bb.0 > x1 || bb.3 < y0 || bb.2 > y1 {
                continue;
            }
            if let Some((s, u)) = cross_edges(p, q, circle.points[j], circle.points[(j + 1) % nt]) {
                crossings.push(Crossing { edge: i, s, angle: (j as f64 + u) / nt as f64, point: p + (q - p) * s });
            }
        }
    }
    crossings.sort_by(|a, b| a.edge.cmp(&b.edge).then(a.s.total_cmp(&b.s)));
    if crossings.len() % 2 == 1 {
        return Err(Error::NotJordanAtResolution { intersections: crossings.len() });
    }
    let m = crossings.len();
    let segments = (0..m)
        .map(|c| {
            let (a, b) = (crossings[c], crossings[(c + 1) % m]);
            let mut arc = vec![a.point];
            let mut steps = (b.edge + n - a.edge) % n;
            if steps == 0 && (m == 1 || b.s <= a.s) {
                steps = n;
            }
            arc.extend((1..=steps).map(|k| v[(a.edge + k) % n]));
            arc.push(b.point);
            let probe = if arc.len() > 2 { arc[1] } else { (arc[0] + arc[1]) / 2.0 };
            let kind = if circle.inside(probe) { SegmentType::R } else { SegmentType::P };
            chord_and_region(circle, arc, kind, a.angle, b.angle)
        })
        .collect::<Vec<_>>();
    let k = segments.iter().filter(|s| s.kind == SegmentType::P).count();
    Ok(Segmentation { segments, k, perturbed })
}

/// Circle vertices strictly between `from` and `to` going ccw or cw.
fn circle_arc(circle: &Circle, from: f64, to: f64, ccw: bool) -> Vec<C64> {
    let n = circle.len();
    let nf = n as f64;
    let mut out = Vec::new();
    if ccw {
        let len = (to - from).rem_euclid(1.0);
        let mut j = (from * nf).floor() as i64 + 1;
        while ((j as f64 / nf) - from).rem_euclid(1.0) < len && out.len() < n {
            out.push(circle.points[j.rem_euclid(n as i64) as usize]);
            j += 1;
        }
    } else {
        let len = (from - to).rem_euclid(1.0);
        let mut j = (from * nf).ceil() as i64 - 1;
        while (from - (j as f64 / nf)).rem_euclid(1.0) < len && out.len() < n {
            out.push(circle.points[j.rem_euclid(n as i64) as usize]);
            j -= 1;
        }
    }
    out
}

/// The chord is the circle arc that closes the segment into a loop not
/// winding around the puncture, i.e. the arc homotopic to the segment rel
/// endpoints in `ℂ*`.
fn chord_and_region(circle: &Circle, arc: Vec<C64>, kind: SegmentType, start: f64, end: f64) -> TypedSegment {
    let build = |ccw: bool| {
        let mut r = arc.clone();
        r.extend(circle_arc(circle, end, start, ccw));
        r
    };
    let (ccw, cw) = (build(true), build(false));
    let (wc, ww) = (winding_number(&ccw, circle.origin), winding_number(&cw, circle.origin));
    let chord_ccw = match (wc, ww) {
        (0, _) => true,
        (_, 0) => false,
        _ => wc.abs() <= ww.abs(),
    };
    TypedSegment {
        arc,
        kind,
        start_angle: start,
        end_angle: end,
        chord_ccw,
        region: if chord_ccw { ccw } else { cw },
    }
}

/// A postcritical point of the mated map.
#[derive(Clone, Debug, Serialize)]
pub struct MarkedPoint {
    pub label: String,
    pub point: Point,
    /// Circle angle when the point lies on `T`.
    pub circle_angle: Option<f64>,
    pub in_pf: bool,
    pub in_pg: bool,
    /// Periodic point of `P_f` (member of `𝒪`).
    pub periodic: bool,
    /// Index of the image point in the same list.
    pub image: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MarkedPoints {
    pub points: Vec<MarkedPoint>,
}

impl MarkedPoints {
    pub fn p_f(&self) -> impl Iterator<Item = (usize, &MarkedPoint)> {
        self.points.iter().enumerate().filter(|(_, m)| m.in_pf)
    }

    pub fn orbit(&self) -> impl Iterator<Item = (usize, &MarkedPoint)> {
        self.points.iter().enumerate().filter(|(_, m)| m.in_pf && m.periodic)
    }

    /// Postcritical points of a realized mating: forward images (one or
    /// more steps) of critical merged nodes, split by the side whose
    /// critical point they follow. Nodes with a circle-model angle sit on
    /// `T`.
    pub fn from_mating(setup: &crate::realizer::MatingSetup, positions: &[Point]) -> Self {
        let p = &setup.merged;
        let n = p.nodes.len();
        let forward = |pred: &dyn Fn(usize) -> bool| {
            let mut hit = vec![false; n];
            for i in (0..n).filter(|&i| pred(i)) {
                let mut j = p.edges[i];
                while !hit[j] {
                    hit[j] = true;
                    j = p.edges[j];
                }
            }
            hit
        };
        let pf = forward(&|i| setup.side_degrees[i].0 > 1);
        let pg = forward(&|i| setup.side_degrees[i].1 > 1);
        let keep: Vec<usize> = (0..n).filter(|&i| pf[i] || pg[i]).collect();
        let index = |i: usize| keep.iter().position(|&k| k == i).expect("postcritical set is forward invariant");
        let points = keep
            .iter()
            .map(|&i| MarkedPoint {
                label: p.nodes[i].label.clone(),
                point: positions[i],
                circle_angle: setup.model_angles[i].map(|(a, b)| a as f64 / b as f64),
                in_pf: pf[i],
                in_pg: pg[i],
                periodic: p.orbit_shape(i).0 == 0,
                image: index(p.edges[i]),
            })
            .collect();
        MarkedPoints { points }
    }
}

/// `N(Σ_x(γ))`: type-P segments whose region contains `x`.
pub fn count_n(x: &MarkedPoint, seg: &Segmentation) -> Result<usize> {
    let mut n = 0;
    for s in seg.segments.iter().filter(|s| s.kind == SegmentType::P) {
        if s.region_contains(x)? {
            n += 1;
        }
    }
    Ok(n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CurveClass {
    Sigma,
    Pi,
    Lambda,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub class: CurveClass,
    pub peripheral: bool,
    /// Marked points enclosed / not enclosed by the curve.
    pub inside: usize,
    pub outside: usize,
    /// `N(Σ_x)` for every point of `P_f`, by label.
    pub counts: Vec<(String, usize)>,
}

/// Class of the representative: Σ if some periodic `x ∈ P_f` has
/// `N > 0`, Λ if `N = 0` on all of `P_f`, Π otherwise; peripheral when one
/// side holds at most one marked point.
pub fn classify_curve(curve: &PolygonalCurve, seg: &Segmentation, marked: &MarkedPoints) -> Result<Classification> {
    let inside = marked
        .points
        .iter()
        .filter(|m| m.point.as_finite().is_some_and(|z| curve.encloses(z)))
        .count();
    let outside = marked.points.len() - inside;
    let mut counts = Vec::new();
    let (mut sigma, mut all_zero) = (false, true);
    for (_, m) in marked.p_f() {
        let c = count_n(m, seg)?;
        sigma |= m.periodic && c > 0;
        all_zero &= c == 0;
        counts.push((m.label.clone(), c));
    }
    let class = if sigma {
        CurveClass::Sigma
    } else if all_zero {
        CurveClass::Lambda
    } else {
        CurveClass::Pi
    };
    Ok(Classification { class, peripheral: inside.min(outside) <= 1, inside, outside, counts })
}

/// Whether the curve avoids every finite marked point by `margin`.
pub fn avoids(curve: &PolygonalCurve, marked: &MarkedPoints, margin: f64) -> bool {
    marked
        .points
        .iter()
        .filter_map(|m| m.point.as_finite())
        .all(|z| distance_to_polygon(&curve.vertices, z) >= margin)
}

/// Orientation of a polygon: positive for counterclockwise.
pub fn is_ccw(poly: &[C64]) -> bool {
    let n = poly.len();
    let lowest = (0..n).min_by(|&a, &b| poly[a].im.total_cmp(&poly[b].im).then(poly[a].re.total_cmp(&poly[b].re))).unwrap_or(0);
    orient(poly[(lowest + n - 1) % n], poly[lowest], poly[(lowest + 1) % n]) > 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar(r: f64, turns: f64) -> C64 {
        C64::from_polar(r, TAU * turns)
    }

    /// Annular sector between radii `r0 < 1 < r1` and angles `a..b`.
    pub(crate) fn sector(r0: f64, r1: f64, a: f64, b: f64, m: usize) -> PolygonalCurve {
        let mut v: Vec<C64> = (0..=m).map(|k| polar(r1, a + (b - a) * k as f64 / m as f64)).collect();
        v.extend((0..=m).map(|k| polar(r0, b - (b - a) * k as f64 / m as f64)));
        PolygonalCurve::new(v).unwrap()
    }

    #[test]
    fn disjoint_circle_has_no_segments() {
        let c = PolygonalCurve::new((0..64).map(|k| polar(2.0, k as f64 / 64.0)).collect()).unwrap();
        let s = segment_curve(&c, &Circle::unit(256)).unwrap();
        assert!(s.segments.is_empty());
        assert_eq!(s.k, 0);
    }

    #[test]
    fn lens_has_one_segment_of_each_type() {
        // crosses T at angles 0 and 1/4, bulging outward then returning inside
        let c = sector(0.8, 1.3, 0.0, 0.25, 32);
        let c = PolygonalCurve::new(c.vertices.iter().map(|z| z * polar(1.0, -0.01)).collect()).unwrap();
        let s = segment_curve(&c, &Circle::unit(512)).unwrap();
        assert_eq!(s.segments.len(), 2);
        assert_eq!(s.k, 1);
        let p = s.segments.iter().find(|s| s.kind == SegmentType::P).unwrap();
        assert!(p.chord_contains(0.1) && !p.chord_contains(0.5));
        for seg in &s.segments {
            assert_eq!(winding_number(&seg.region, C64::new(0.0, 0.0)), 0);
        }
    }

    #[test]
    fn nested_bulges_count_twice() {
        // a comb with two nested outward bulges around angle 0
        let mut v = Vec::new();
        let arc = |r: f64, a: f64, b: f64| -> Vec<C64> { (0..=24).map(|k| polar(r, a + (b - a) * k as f64 / 24.0)).collect() };
        v.extend(arc(1.5, -0.1, 0.1));
        v.extend(arc(0.9, 0.1, 0.08));
        v.extend(arc(1.2, 0.08, -0.08));
        v.extend(arc(0.8, -0.08, -0.1));
        let c = PolygonalCurve::new(v).unwrap();
        let s = segment_curve(&c, &Circle::unit(1024)).unwrap();
        assert_eq!(s.k, 2);
        let x = MarkedPoint {
            label: "x".into(),
            point: Point::finite(1.1, 0.0),
            circle_angle: None,
            in_pf: true,
            in_pg: false,
            periodic: true,
            image: 0,
        };
        assert_eq!(count_n(&x, &s).unwrap(), 2);
        let far = MarkedPoint { point: Point::finite(-3.0, 0.0), ..x.clone() };
        assert_eq!(count_n(&far, &s).unwrap(), 0);
    }

    fn marked(points: &[(&str, C64, Option<f64>, bool, bool, usize)]) -> MarkedPoints {
        MarkedPoints {
            points: points
                .iter()
                .map(|&(l, z, a, pf, per, img)| MarkedPoint {
                    label: l.into(),
                    point: Point::Finite(z),
                    circle_angle: a,
                    in_pf: pf,
                    in_pg: !pf,
                    periodic: per,
                    image: img,
                })
                .collect(),
        }
    }

    #[test]
    fn classes_of_simple_curves() {
        let circle = Circle::unit(1024);
        let m = marked(&[
            ("p", C64::new(1.2, 0.0), None, true, true, 0),
            ("q", C64::new(1.2, 0.5), None, true, false, 0),
            ("g1", C64::new(0.3, 0.0), None, false, false, 2),
            ("g2", C64::new(-0.3, 0.0), None, false, false, 3),
        ]);
        let big = PolygonalCurve::new((0..64).map(|k| polar(2.0, k as f64 / 64.0)).collect()).unwrap();
        let c = classify_curve(&big, &segment_curve(&big, &circle).unwrap(), &m).unwrap();
        assert_eq!(c.class, CurveClass::Lambda);
        assert!(c.peripheral);
        // encloses p and g1
        let lens = sector(0.1, 1.4, -0.03, 0.03, 16);
        let c = classify_curve(&lens, &segment_curve(&lens, &circle).unwrap(), &m).unwrap();
        assert_eq!(c.class, CurveClass::Sigma);
        assert!(!c.peripheral);
        // encloses the preperiodic q only on the P side (and g1)
        let ring = sector(0.25, 1.4, 0.04, 0.12, 16);
        let ring = PolygonalCurve::new(ring.vertices.iter().map(|z| z * polar(1.0, -0.03)).collect()).unwrap();
        let c = classify_curve(&ring, &segment_curve(&ring, &circle).unwrap(), &m).unwrap();
        assert_eq!(c.counts, vec![("p".to_string(), 0), ("q".to_string(), 1)]);
        assert_eq!(c.class, CurveClass::Pi);
    }

    #[test]
    fn points_on_the_circle_use_the_chord() {
        let circle = Circle::unit(1024);
        let m = marked(&[("one", C64::new(1.0, 0.0), Some(0.0), true, true, 0)]);
        let lens = sector(0.9, 1.2, -0.05, 0.05, 16);
        let s = segment_curve(&lens, &circle).unwrap();
        assert_eq!(count_n(&m.points[0], &s).unwrap(), 1);
    }

    #[test]
    fn csv_round_trip() {
        let c = sector(0.5, 1.5, 0.1, 0.2, 8);
        let back = PolygonalCurve::from_csv(&c.to_csv()).unwrap();
        assert_eq!(back, c);
        let err = PolygonalCurve::from_csv("x,y\n1,2\n3,oops\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }
}
