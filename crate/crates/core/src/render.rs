//! Basin classification by attraction to the superattracting cycles of a
//! post-critically finite map, and raster rendering.

use crate::error::{Error, Result};
use crate::portrait::CriticalOrbitPortrait;
use crate::rational::RationalMap;
use crate::sphere::{Point, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Chordal radius around a cycle point that counts as captured.
pub const CAPTURE_RADIUS: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewport {
    pub center: C64,
    pub width: f64,
    pub pixels: (usize, usize),
}

impl Viewport {
    pub fn new(center: C64, width: f64, pixels: (usize, usize)) -> Result<Self> {
        if !(width > 0.0) || pixels.0 < 64 || pixels.1 < 64 {
            return Err(Error::Invalid(format!("viewport needs width > 0 and at least 64x64 pixels, got {width} and {pixels:?}")));
        }
        Ok(Viewport { center, width, pixels })
    }

    pub fn height(&self) -> f64 {
        self.width * self.pixels.1 as f64 / self.pixels.0 as f64
    }

    pub fn pixel_width(&self) -> f64 {
        self.width / self.pixels.0 as f64
    }

    /// Centre of pixel `(i, j)`; row 0 is the top.
    pub fn pixel_center(&self, i: usize, j: usize) -> C64 {
        let pw = self.pixel_width();
        C64::new(
            self.center.re - self.width / 2.0 + (i as f64 + 0.5) * pw,
            self.center.im + self.height() / 2.0 - (j as f64 + 0.5) * pw,
        )
    }

    /// Square window containing every finite point of `points` with a 20%
    /// margin (at least width 4 around the origin when none are finite).
    pub fn covering(points: &[Point], px: usize) -> Viewport {
        let finite: Vec<C64> = points.iter().filter_map(|p| p.as_finite()).collect();
        let (mut lo, mut hi) = (C64::new(-1.0, -1.0), C64::new(1.0, 1.0));
        for z in &finite {
            lo = C64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = C64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let side = (hi.re - lo.re).max(hi.im - lo.im) * 1.4;
        Viewport { center: (lo + hi) / 2.0, width: side, pixels: (px.max(1), px.max(1)) }
    }
}

/// Classification of one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Label {
    /// Captured by attracting cycle `cycle` after `time` iterations.
    Basin { cycle: usize, time: usize },
    /// Not captured within the iteration budget (Julia-set proxy).
    Julia,
}

/// The periodic cycles of the portrait containing a critical node: for a
/// post-critically finite map these are all its attracting cycles.
pub fn attracting_cycles(_map: &RationalMap, portrait: &CriticalOrbitPortrait) -> Vec<Vec<Point>> {
    let mut seen = vec![false; portrait.nodes.len()];
    let mut out = Vec::new();
    for i in 0..portrait.nodes.len() {
        if seen[i] || portrait.orbit_shape(i).0 != 0 {
            continue;
        }
        let mut cyc = vec![i];
        let mut j = portrait.edges[i];
        while j != i {
            cyc.push(j);
            j = portrait.edges[j];
        }
        for &c in &cyc {
            seen[c] = true;
        }
        if cyc.iter().any(|&c| portrait.is_critical(c)) {
            out.push(cyc.iter().filter_map(|&c| portrait.nodes[c].point).collect());
        }
    }
    out
}

pub fn classify_point(map: &RationalMap, z: Point, cycles: &[Vec<Point>], max_iter: usize) -> Label {
    let mut p = z;
    for time in 0..=max_iter {
        for (ci, cyc) in cycles.iter().enumerate() {
            if cyc.iter().any(|q| q.chordal(&p) < CAPTURE_RADIUS) {
                return Label::Basin { cycle: ci, time };
            }
        }
        p = map.eval(p);
    }
    Label::Julia
}

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub viewport: Viewport,
    pub labels: Vec<Label>,
}

impl Raster {
    pub fn label(&self, i: usize, j: usize) -> Label {
        self.labels[j * self.viewport.pixels.0 + i]
    }

    /// Basin index → hue, attraction time → brightness; Julia proxy black.
    pub fn rgb(&self) -> Vec<u8> {
        self.labels
            .iter()
            .flat_map(|l| match *l {
                Label::Julia => [0, 0, 0],
                Label::Basin { cycle, time } => {
                    let hue = (cycle as f64 * 0.381_966_011_250_105_1 + 0.05).fract();
                    let value = 1.0 - 0.75 * (time.min(48) as f64 / 48.0).sqrt();
                    hsv(hue, 0.75, value)
                }
            })
            .collect()
    }

    pub fn ppm_bytes(&self) -> Vec<u8> {
        let (w, h) = self.viewport.pixels;
        let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
        out.extend(self.rgb());
        out
    }

    pub fn write_ppm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        f.write_all(&self.ppm_bytes()).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let (w, h) = self.viewport.pixels;
        image::save_buffer(path, &self.rgb(), w as u32, h as u32, image::ExtendedColorType::Rgb8)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }
}

fn hsv(h: f64, s: f64, v: f64) -> [u8; 3] {
    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - f * s), v * (1.0 - (1.0 - f) * s));
    let (r, g, b) = match i as i64 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [(r * 255.0).round() as u8, (g * 255.0).round() as u8, (b * 255.0).round() as u8]
}

/// Classifies every pixel centre (in parallel; output order is fixed).
pub fn render(map: &RationalMap, cycles: &[Vec<Point>], viewport: &Viewport, max_iter: usize) -> Raster {
    let (w, h) = viewport.pixels;
    let labels = (0..w * h)
        .into_par_iter()
        .map(|k| classify_point(map, Point::Finite(viewport.pixel_center(k % w, k / w)), cycles, max_iter))
        .collect();
    Raster { viewport: *viewport, labels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portrait::{portrait_of, PERIOD_TOL};

    fn square() -> (RationalMap, Vec<Vec<Point>>) {
        let m = RationalMap::power(2);
        let cycles = attracting_cycles(&m, &portrait_of(&m, 16, PERIOD_TOL).unwrap());
        (m, cycles)
    }

    #[test]
    fn square_basins() {
        let (m, cycles) = square();
        assert_eq!(cycles.len(), 2);
        let at = |z: Point| match classify_point(&m, z, &cycles, 200) {
            Label::Basin { cycle, .. } => cycles[cycle][0],
            Label::Julia => panic!("unclassified"),
        };
        assert_eq!(at(Point::finite(0.5, 0.0)), Point::finite(0.0, 0.0));
        assert_eq!(at(Point::finite(2.0, 0.0)), Point::Infinity);
        assert_eq!(classify_point(&m, Point::finite(1.0, 0.0), &cycles, 200), Label::Julia);
    }

    #[test]
    fn ppm_header_and_size() {
        let (m, cycles) = square();
        let v = Viewport::new(C64::new(0.0, 0.0), 4.0, (64, 64)).unwrap();
        let r = render(&m, &cycles, &v, 100);
        let bytes = r.ppm_bytes();
        assert!(bytes.starts_with(b"P6\n64 64\n255\n"));
        assert_eq!(bytes.len(), 13 + 64 * 64 * 3);
        assert!(Viewport::new(C64::new(0.0, 0.0), 4.0, (32, 64)).is_err());
    }
}
