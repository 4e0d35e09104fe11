//! Planar polygon utilities shared by the boundary checks and the curve
//! calculus.

use crate::sphere::C64;

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Orientation of `c` relative to the directed line `a -> b`.
pub fn orient(a: C64, b: C64, c: C64) -> f64 {
    cross(b - a, c - a)
}

/// Winding number of the closed polygon around `p` (Sunday's crossing rule).
pub fn winding_number(poly: &[C64], p: C64) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if a.im <= p.im {
            if b.im > p.im && orient(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.im <= p.im && orient(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Signed area (positive for counterclockwise polygons).
pub fn signed_area(poly: &[C64]) -> f64 {
    let n = poly.len();
    0.5 * (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>()
}

pub fn point_segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to the closed polygon.
pub fn distance_to_polygon(poly: &[C64], p: C64) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Proper intersection of segments `[a,b]` and `[c,d]`: returns the
/// parameters `(s, t)` along each segment.
pub fn segment_intersection(a: C64, b: C64, c: C64, d: C64) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let denom = cross(r, s);
    if denom == 0.0 {
        return None;
    }
    let qp = c - a;
    let t = cross(qp, s) / denom;
    let u = cross(qp, r) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some((t, u))
    } else {
        None
    }
}

fn segments_cross(a: C64, b: C64, c: C64, d: C64) -> bool {
    let d1 = orient(a, b, c);
    let d2 = orient(a, b, d);
    let d3 = orient(c, d, a);
    let d4 = orient(c, d, b);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// Number of pairs of non-adjacent edges of the closed polygon that cross.
///
/// Edges are swept in order of their leftmost x coordinate; only edges whose
/// x-ranges overlap are compared.
pub fn self_intersections(poly: &[C64]) -> usize {
    let n = poly.len();
    if n < 4 {
        return 0;
    }
    let mut edges: Vec<(f64, f64, usize)> = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            (a.re.min(b.re), a.re.max(b.re), i)
        })
        .collect();
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.2.cmp(&y.2)));
    let mut active: Vec<(f64, usize)> = Vec::new();
    let mut count = 0;
    for &(lo, hi, i) in &edges {
        active.retain(|&(h, _)| h >= lo);
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for &(_, j) in &active {
            let adjacent = (i + 1) % n == j || (j + 1) % n == i;
            if adjacent {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                count += 1;
            }
        }
        active.push((hi, i));
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn square() -> Vec<C64> {
        vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)]
    }

    #[test]
    fn winding_of_square() {
        assert_eq!(winding_number(&square(), c(0.5, 0.5)), 1);
        assert_eq!(winding_number(&square(), c(1.5, 0.5)), 0);
        let mut rev = square();
        rev.reverse();
        assert_eq!(winding_number(&rev, c(0.5, 0.5)), -1);
        assert!((signed_area(&square()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bow = vec![c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)];
        assert_eq!(self_intersections(&bow), 1);
        assert_eq!(self_intersections(&square()), 0);
    }

    #[test]
    fn circle_is_simple() {
        let poly: Vec<C64> = (0..1000)
            .map(|k| C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 1000.0))
            .collect();
        assert_eq!(self_intersections(&poly), 0);
    }

    #[test]
    fn intersection_parameters() {
        let (s, t) = segment_intersection(c(0.0, 0.0), c(2.0, 0.0), c(1.0, -1.0), c(1.0, 1.0)).unwrap();
        assert!((s - 0.5).abs() < 1e-15 && (t - 0.5).abs() < 1e-15);
    }
}
