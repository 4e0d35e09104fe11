//! The boundary gluing `Φ(x) = φ⁻¹(e^{2πik/(d0−1)} / ψ(x))` between the
//! marked basins of two maps, and the piecewise topological model of the
//! mating in circle-model coordinates (unit circle `T` = glued boundary,
//! `f` outside, `g` inside).

use crate::boettcher::BoettcherChart;
use crate::error::{Error, Result};
use crate::geometry::winding_number;
use crate::sphere::{Point, C64};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;
use std::fmt::Write as _;

/// One sampled pair `(x ∈ ∂D_g, Φ(x) ∈ ∂D_f)` at chart radius `1 − ε`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GluingSample {
    pub angle_g: f64,
    pub x: C64,
    /// Angle of `Φ(x)` re-measured through the `f` chart.
    pub angle_f: f64,
    pub phi_x: C64,
}

#[derive(Clone, Debug)]
pub struct GluingMap {
    pub chart_f: BoettcherChart,
    pub chart_g: BoettcherChart,
    pub k: usize,
    /// Rotation of the gluing in turns, `k/(d0−1)` for a genuine gluing.
    pub rotation: f64,
    pub epsilon: f64,
    pub samples: Vec<GluingSample>,
}

fn turns(z: C64) -> f64 {
    (z.arg() / TAU).rem_euclid(1.0)
}

/// Signed angular step `b − a` reduced to `[−½, ½)`.
fn step(a: f64, b: f64) -> f64 {
    (b - a + 0.5).rem_euclid(1.0) - 0.5
}

/// Gluing with index `k`, sampled at `n` angles of `∂D_g`.
pub fn build_gluing(chart_f: &BoettcherChart, chart_g: &BoettcherChart, k: usize, n: usize, epsilon: f64) -> Result<GluingMap> {
    if chart_f.d0 != chart_g.d0 {
        return Err(Error::ChartMismatch(format!("local degrees {} and {} differ", chart_f.d0, chart_g.d0)));
    }
    let d0 = chart_f.d0;
    if k < 1 || k > d0 - 1 {
        return Err(Error::Invalid(format!("gluing index {k} outside 1..={}", d0 - 1)));
    }
    let rotation = (k as f64 / (d0 - 1) as f64).rem_euclid(1.0);
    let g = build_gluing_with_rotation(chart_f, chart_g, rotation, n, epsilon)?;
    let mut g = g;
    g.k = k;
    let margin = monotonicity_margin(&g.samples);
    if margin <= 0.0 || winding(&g) != -1 {
        return Err(Error::NotHomeomorphismAtResolution(format!(
            "angle correspondence not strictly decreasing (margin {margin:.3e})"
        )));
    }
    Ok(g)
}

/// Gluing with an arbitrary rotation factor `e^{2πi·rotation}`; only
/// rotations with `rotation·(d0−1) ∈ ℤ` are equivariant. Used to inject
/// negative controls.
pub fn build_gluing_with_rotation(
    chart_f: &BoettcherChart,
    chart_g: &BoettcherChart,
    rotation: f64,
    n: usize,
    epsilon: f64,
) -> Result<GluingMap> {
    if chart_f.d0 != chart_g.d0 {
        return Err(Error::ChartMismatch(format!("local degrees {} and {} differ", chart_f.d0, chart_g.d0)));
    }
    if n < 4 || !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Invalid(format!("need n ≥ 4 and 0 < ε < 1, got {n}, {epsilon}")));
    }
    let r = 1.0 - epsilon;
    let samples = (0..n)
        .into_par_iter()
        .map(|j| {
            let angle_g = j as f64 / n as f64;
            let x = chart_g.inverse(C64::from_polar(r, TAU * angle_g))?;
            // e^{2πi·rot}/ψ(x) has radius 1/(1−ε); clamp back to 1−ε
            let target = C64::from_polar(1.0, TAU * rotation) / chart_g.value(Point::Finite(x))?;
            let phi_x = chart_f.inverse(C64::from_polar(r, target.arg()))?;
            let angle_f = turns(chart_f.value(Point::Finite(phi_x))?);
            Ok(GluingSample { angle_g, x, angle_f, phi_x })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GluingMap { chart_f: chart_f.clone(), chart_g: chart_g.clone(), k: 0, rotation, epsilon, samples })
}

/// Smallest decrease of the `f` angle between consecutive samples (positive
/// iff the correspondence is strictly decreasing).
fn monotonicity_margin(s: &[GluingSample]) -> f64 {
    (0..s.len())
        .map(|j| -step(s[j].angle_f, s[(j + 1) % s.len()].angle_f))
        .fold(f64::INFINITY, f64::min)
}

/// Winding of `Φ(∂D_g)` around the centre of `f`, with `∂D_g` traversed
/// positively.
fn winding(g: &GluingMap) -> i32 {
    let pts: Vec<C64> = g.samples.iter().map(|s| s.phi_x).collect();
    winding_number(&pts, g.chart_f.center)
}

impl GluingMap {
    /// `Φ` at chart angle `angle_g` (turns), as a point of `∂D_f` at radius
    /// `1 − ε`.
    pub fn phi_at_angle(&self, angle_g: f64) -> Result<C64> {
        self.chart_f.inverse(C64::from_polar(1.0 - self.epsilon, TAU * (self.rotation - angle_g)))
    }

    /// `(angle_g, angle_f)` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle_g,angle_f\n");
        for s in &self.samples {
            let _ = writeln!(out, "{:.12},{:.12}", s.angle_g, s.angle_f);
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GluingReport {
    pub samples: usize,
    pub epsilon: f64,
    pub rotation: f64,
    pub winding: i32,
    pub monotone_decreasing: bool,
    pub monotonicity_margin: f64,
    /// `max |Φ(g(x)) − f(Φ(x))|`, both sides re-clamped to radius `1 − ε`.
    pub equivariance_defect: f64,
    pub passed: bool,
    pub note: String,
}

/// Orientation, monotonicity and equivariance of a gluing.
pub fn verify_gluing(g: &GluingMap, tol: f64) -> GluingReport {
    let margin = monotonicity_margin(&g.samples);
    let w = winding(g);
    let r = 1.0 - g.epsilon;
    let defects: Vec<f64> = g
        .samples
        .par_iter()
        .map(|s| {
            let side_g = || -> Result<C64> {
                let gx = g.chart_g.map.eval_c(s.x);
                let a = turns(g.chart_g.value(gx)?);
                g.chart_f.inverse(C64::from_polar(r, TAU * (g.rotation - a)))
            };
            let side_f = || -> Result<C64> {
                let fx = g.chart_f.map.eval_c(s.phi_x);
                let a = turns(g.chart_f.value(fx)?);
                g.chart_f.inverse(C64::from_polar(r, TAU * a))
            };
            match (side_g(), side_f()) {
                (Ok(a), Ok(b)) => (a - b).norm(),
                _ => f64::INFINITY,
            }
        })
        .collect();
    let defect = defects.into_iter().fold(0.0, f64::max);
    GluingReport {
        samples: g.samples.len(),
        epsilon: g.epsilon,
        rotation: g.rotation,
        winding: w,
        monotone_decreasing: margin > 0.0,
        monotonicity_margin: margin,
        equivariance_defect: defect,
        passed: margin > 0.0 && w == -1 && defect < tol,
        note: "rotation factor exp(2πik/(d0−1)); the printed exponent d−1 is read as d0−1".into(),
    }
}

/// Collar of a basin boundary: forward map `h(r e^{2πiθ}) = c + r (b(θ) − c)`
/// with `b` the sampled boundary proxy; the inverse uses normal
/// coordinates (angle of the nearest boundary point, radius `1 + dist/|b − c|`),
/// which needs no star-shapedness.
#[derive(Clone, Debug)]
struct Collar {
    center: C64,
    /// Boundary proxy at angles `j/n`.
    boundary: Vec<C64>,
}

impl Collar {
    fn new(chart: &BoettcherChart, n: usize, epsilon: f64) -> Result<Self> {
        let boundary: Vec<C64> = (0..n)
            .into_par_iter()
            .map(|j| chart.ray_point(j as f64 / n as f64, epsilon))
            .collect::<Result<_>>()?;
        if winding_number(&boundary, chart.center) != 1 {
            return Err(Error::NotHomeomorphismAtResolution("basin boundary does not wind once about its centre".into()));
        }
        Ok(Collar { center: chart.center, boundary })
    }

    fn at(&self, theta: f64) -> C64 {
        let n = self.boundary.len();
        let x = theta.rem_euclid(1.0) * n as f64;
        let j = (x.floor() as usize) % n;
        let t = x - x.floor();
        self.boundary[j] * (1.0 - t) + self.boundary[(j + 1) % n] * t
    }

    /// `(θ, r)` for a point off the basin: radial coordinates where the ray
    /// from the centre meets the boundary proxy once, otherwise the angle of
    /// the nearest boundary point and the normal distance scaled by the
    /// collar radius there.
    fn invert(&self, z: C64) -> (f64, f64) {
        let n = self.boundary.len();
        let dir = z - self.center;
        let mut crossings = Vec::new();
        for j in 0..n {
            let (a, b) = (self.boundary[j] - self.center, self.boundary[(j + 1) % n] - self.center);
            // a + t(b − a) = s·dir with t ∈ [0,1), s > 0
            let e = b - a;
            let det = e.re * dir.im - e.im * dir.re;
            if det == 0.0 {
                continue;
            }
            let t = (a.im * dir.re - a.re * dir.im) / det;
            let s = (e.re * a.im - e.im * a.re) / det;
            if (0.0..1.0).contains(&t) && s > 0.0 {
                crossings.push(((j as f64 + t) / n as f64, 1.0 / s));
            }
        }
        if let [(theta, r)] = crossings[..] {
            return (theta, r);
        }
        let (mut best_t, mut best_d) = (0.0, f64::INFINITY);
        for j in 0..n {
            let (a, b) = (self.boundary[j], self.boundary[(j + 1) % n]);
            let ab = b - a;
            let t = (((z - a) * ab.conj()).re / ab.norm_sqr().max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
            let d = (z - (a + ab * t)).norm();
            if d < best_d {
                best_d = d;
                best_t = (j as f64 + t) / n as f64;
            }
        }
        let b = self.at(best_t);
        (best_t, 1.0 + best_d / (b - self.center).norm().max(f64::MIN_POSITIVE))
    }
}

/// The topological mating in circle-model coordinates: outside the unit
/// circle is `D_f^c` (collar of `∂D_f`), inside is `D_g^c` (reciprocal
/// collar of `∂D_g`, so the model's 0 is `g`'s far side). A boundary
/// point at model angle `θ` is `θ_f = θ` on `∂D_f` and `θ_g = rot − θ` on
/// `∂D_g`.
#[derive(Clone, Debug)]
pub struct TopologicalMatingModel {
    pub gluing: GluingMap,
    collar_f: Collar,
    collar_g: Collar,
}

impl TopologicalMatingModel {
    pub fn new(gluing: GluingMap, n: usize) -> Result<Self> {
        let collar_f = Collar::new(&gluing.chart_f, n, gluing.epsilon)?;
        let collar_g = Collar::new(&gluing.chart_g, n, gluing.epsilon)?;
        Ok(TopologicalMatingModel { gluing, collar_f, collar_g })
    }

    /// Model point → point of the `f` plane (`|w| ≥ 1`) or `g` plane.
    pub fn to_plane(&self, w: C64) -> Point {
        let (r, theta) = (w.norm(), turns(w));
        if r >= 1.0 {
            Point::Finite(self.collar_f.center + (self.collar_f.at(theta) - self.collar_f.center) * r)
        } else if r == 0.0 {
            Point::Infinity
        } else {
            let c = self.collar_g.center;
            Point::Finite(c + (self.collar_g.at(self.gluing.rotation - theta) - c) / r)
        }
    }

    /// The piecewise map: `f` outside, `g` inside; images falling into the
    /// glued basins re-enter the other side through the chart coordinates.
    pub fn eval_model(&self, w: C64) -> Result<C64> {
        let gl = &self.gluing;
        let exceeded = |e: Error| Error::ResolutionExceeded(format!("model evaluation at {w}: {e}"));
        if w.norm() >= 1.0 {
            let z = self.to_plane(w).as_finite().unwrap();
            let fz = gl.chart_f.map.eval_c(z);
            let Point::Finite(fz) = fz else { return Ok(C64::new(f64::INFINITY, 0.0)) };
            if gl.chart_f.in_immediate_basin(fz) {
                // D_f corresponds to the inside through φ
                gl.chart_f.value(Point::Finite(fz)).map_err(exceeded)
            } else {
                let (theta, r) = self.collar_f.invert(fz);
                Ok(C64::from_polar(r, TAU * theta))
            }
        } else {
            let Point::Finite(z) = self.to_plane(w) else {
                return self.eval_infinity_g();
            };
            let gz = gl.chart_g.map.eval_c(z);
            let Point::Finite(gz) = gz else { return Ok(C64::new(0.0, 0.0)) };
            if gl.chart_g.in_immediate_basin(gz) {
                // D_g corresponds to the outside through e^{2πi·rot}/ψ
                let psi = gl.chart_g.value(Point::Finite(gz)).map_err(exceeded)?;
                Ok(C64::from_polar(1.0, TAU * gl.rotation) / psi)
            } else {
                let (theta_g, r) = self.collar_g.invert(gz);
                Ok(C64::from_polar(1.0 / r, TAU * (gl.rotation - theta_g)))
            }
        }
    }

    fn eval_infinity_g(&self) -> Result<C64> {
        match self.gluing.chart_g.map.value_at_infinity() {
            Point::Infinity => Ok(C64::new(0.0, 0.0)),
            Point::Finite(_) => Err(Error::ResolutionExceeded("g does not fix infinity".into())),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelReport {
    pub samples: usize,
    /// `max |arg F(e^{2πiθ}) − d0 θ|` in turns.
    pub circle_angle_error: f64,
    /// `max |F((1+δ)e^{2πiθ}) − F((1−δ)e^{2πiθ})|`.
    pub continuity_defect: f64,
    pub delta: f64,
}

/// Samples the model on `T` and across it.
pub fn verify_model(model: &TopologicalMatingModel, n: usize, delta: f64) -> Result<ModelReport> {
    let d0 = model.gluing.chart_f.d0 as f64;
    let rows = (0..n)
        .into_par_iter()
        .map(|j| {
            let theta = j as f64 / n as f64;
            let on = model.eval_model(C64::from_polar(1.0, TAU * theta))?;
            let err = step(d0 * theta, turns(on)).abs();
            let out = model.eval_model(C64::from_polar(1.0 + delta, TAU * theta))?;
            let inn = model.eval_model(C64::from_polar(1.0 - delta, TAU * theta))?;
            Ok((err, (out - inn).norm()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(ModelReport {
        samples: n,
        circle_angle_error: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        continuity_defect: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::RationalMap;

    fn square_chart() -> BoettcherChart {
        BoettcherChart::new(&RationalMap::power(2), C64::new(0.0, 0.0), 2).unwrap()
    }

    #[test]
    fn identity_charts_glue_by_reflection() {
        let c = square_chart();
        let g = build_gluing(&c, &c, 1, 64, 1e-4).unwrap();
        for s in &g.samples {
            let expect = C64::from_polar(1.0 - 1e-4, -TAU * s.angle_g);
            assert!((s.phi_x - expect).norm() < 1e-12);
        }
        let rep = verify_gluing(&g, 1e-12);
        assert_eq!(rep.winding, -1);
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn wrong_rotation_breaks_equivariance() {
        let c = square_chart();
        let g = build_gluing_with_rotation(&c, &c, 1.0 / 6.0, 64, 1e-4).unwrap();
        assert!(verify_gluing(&g, 1e-5).equivariance_defect > 1e-2);
    }

    #[test]
    fn square_model_squares_outside() {
        let c = square_chart();
        let m = TopologicalMatingModel::new(build_gluing(&c, &c, 1, 16, 1e-4).unwrap(), 1024).unwrap();
        let w = C64::from_polar(1.5, 0.7);
        // collar scale 1 − ε on both ends of the squaring
        let img = m.eval_model(w).unwrap();
        assert!((img - w * w * (1.0 - 1e-4)).norm() < 1e-3, "{img}");
        let rep = verify_model(&m, 128, 1e-4).unwrap();
        assert!(rep.circle_angle_error < 1e-6 && rep.continuity_defect < 1e-3, "{rep:?}");
    }

    #[test]
    fn mismatched_degrees_rejected() {
        let c2 = square_chart();
        let c3 = BoettcherChart::new(&RationalMap::power(3), C64::new(0.0, 0.0), 3).unwrap();
        assert!(matches!(build_gluing(&c2, &c3, 1, 16, 1e-4), Err(Error::ChartMismatch(_))));
    }
}
