use super::{
    avoids, classify_curve, count_n, pullback_curve, segment_curve, Circle, CurveClass, MarkedPoints, PolygonalCurve,
    SegmentType, Segmentation,
};
use crate::error::Result;
use crate::geometry::distance_to_polygon;
use crate::rational::RationalMap;
use crate::sphere::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OoStatus {
    Strict,
    Equality,
    Violated,
}

/// One instance of `Σ_η N(Σ_x(η)) ≤ N(Σ_{f(x)}(γ))`.
#[derive(Clone, Debug, Serialize)]
pub struct OoRow {
    pub point: String,
    pub image: String,
    pub lhs: usize,
    pub rhs: usize,
    pub status: OoStatus,
}

/// Classes of the non-peripheral `n`-fold lifts of a non-Σ curve. Lifts
/// that are not Λ are reported as unminimized representatives, since only
/// the homotopy class is constrained.
#[derive(Clone, Debug, Serialize)]
pub struct EvObservation {
    pub depth: usize,
    pub lifts_checked: usize,
    pub non_lambda: usize,
    pub status: &'static str,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CurveReport {
    pub index: usize,
    pub vertices: usize,
    pub class: Option<CurveClass>,
    pub peripheral: bool,
    pub k: usize,
    pub lift_count: usize,
    pub multiplicity_total: usize,
    pub degree: usize,
    pub lift_residual: f64,
    pub lift_classes: Vec<CurveClass>,
    /// Marked points found in type-P regions of non-peripheral lifts.
    pub ess_checked: usize,
    pub ess_violations: usize,
    pub oo: Vec<OoRow>,
    pub ev: Option<EvObservation>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnessReport {
    pub curves: Vec<CurveReport>,
    pub oo_rows: usize,
    pub oo_equalities: usize,
    pub oo_violations: usize,
    pub ess_violations: usize,
    pub multiplicity_failures: usize,
    pub ev_unminimized: usize,
    pub errors: usize,
    pub passed: bool,
}

/// Smallest `n ≥ 1` with `f^n(x)` periodic for every `x ∈ P_f`.
pub fn eventual_periodicity_bound(marked: &MarkedPoints) -> usize {
    marked
        .p_f()
        .map(|(mut i, _)| {
            let mut steps = 0;
            while !marked.points[i].periodic && steps <= marked.points.len() {
                i = marked.points[i].image;
                steps += 1;
            }
            steps
        })
        .max()
        .unwrap_or(0)
        .max(1)
}

fn non_peripheral_lifts(
    map: &RationalMap,
    circle: &Circle,
    marked: &MarkedPoints,
    curve: &PolygonalCurve,
) -> Result<(Vec<super::Lift>, Vec<(PolygonalCurve, Segmentation, CurveClass)>)> {
    let lifts = pullback_curve(map, curve)?;
    let mut np = Vec::new();
    for l in &lifts {
        let seg = segment_curve(&l.curve, circle)?;
        let c = classify_curve(&l.curve, &seg, marked)?;
        if !c.peripheral {
            np.push((l.curve.clone(), seg, c.class));
        }
    }
    Ok((lifts, np))
}

fn check_curve(
    map: &RationalMap,
    circle: &Circle,
    marked: &MarkedPoints,
    curve: &PolygonalCurve,
    n_pullbacks: usize,
    report: &mut CurveReport,
) -> Result<()> {
    let seg = segment_curve(curve, circle)?;
    let cls = classify_curve(curve, &seg, marked)?;
    report.class = Some(cls.class);
    report.peripheral = cls.peripheral;
    report.k = seg.k;
    report.degree = map.degree();
    let (lifts, np) = non_peripheral_lifts(map, circle, marked, curve)?;
    report.lift_count = lifts.len();
    report.multiplicity_total = lifts.iter().map(|l| l.multiplicity).sum();
    report.lift_residual = lifts.iter().map(|l| l.residual).fold(0.0, f64::max);
    report.lift_classes = np.iter().map(|x| x.2).collect();
    if cls.peripheral {
        return Ok(());
    }
    let p_segments: Vec<_> = seg.segments.iter().filter(|s| s.kind == SegmentType::P).collect();
    for (_, eta_seg, _) in &np {
        for sigma in eta_seg.segments.iter().filter(|s| s.kind == SegmentType::P) {
            for x in &marked.points {
                if !sigma.region_contains(x)? {
                    continue;
                }
                report.ess_checked += 1;
                let y = &marked.points[x.image];
                let mut found = false;
                for tau in &p_segments {
                    if tau.region_contains(y)? {
                        found = true;
                        break;
                    }
                }
                if !found {
                    report.ess_violations += 1;
                }
            }
        }
    }
    for (_, x) in marked.p_f() {
        let mut lhs = 0;
        for (_, eta_seg, _) in &np {
            lhs += count_n(x, eta_seg)?;
        }
        let y = &marked.points[x.image];
        let rhs = count_n(y, &seg)?;
        let status = match lhs.cmp(&rhs) {
            std::cmp::Ordering::Less => OoStatus::Strict,
            std::cmp::Ordering::Equal => OoStatus::Equality,
            std::cmp::Ordering::Greater => OoStatus::Violated,
        };
        report.oo.push(OoRow { point: x.label.clone(), image: y.label.clone(), lhs, rhs, status });
    }
    if cls.class != CurveClass::Sigma && n_pullbacks > 0 {
        let mut level: Vec<PolygonalCurve> = lifts.into_iter().map(|l| l.curve).collect();
        let mut classes: Vec<CurveClass> = report.lift_classes.clone();
        for _ in 1..n_pullbacks {
            let mut next = Vec::new();
            classes.clear();
            for c in &level {
                let (ls, np) = non_peripheral_lifts(map, circle, marked, c)?;
                classes.extend(np.iter().map(|x| x.2));
                next.extend(ls.into_iter().map(|l| l.curve));
            }
            level = next;
        }
        let non_lambda = classes.iter().filter(|c| **c != CurveClass::Lambda).count();
        report.ev = Some(EvObservation {
            depth: n_pullbacks,
            lifts_checked: classes.len(),
            non_lambda,
            status: if non_lambda == 0 { "observed" } else { "unminimized" },
        });
    }
    Ok(())
}

/// Runs the `ess`, `o-o` and `ev` checks on every curve (in parallel; the
/// report keeps input order). Any `o-o` or `ess` violation, multiplicity
/// total different from the degree, or evaluation error fails the run.
pub fn run_lemma_harness(
    map: &RationalMap,
    circle: &Circle,
    marked: &MarkedPoints,
    curves: &[PolygonalCurve],
    n_pullbacks: usize,
) -> HarnessReport {
    let reports: Vec<CurveReport> = curves
        .par_iter()
        .enumerate()
        .map(|(index, c)| {
            let mut r = CurveReport { index, vertices: c.len(), ..Default::default() };
            if let Err(e) = check_curve(map, circle, marked, c, n_pullbacks, &mut r) {
                r.error = Some(e.to_string());
            }
            r
        })
        .collect();
    let count = |f: &dyn Fn(&CurveReport) -> usize| reports.iter().map(f).sum::<usize>();
    let oo_rows = count(&|r| r.oo.len());
    let oo_equalities = count(&|r| r.oo.iter().filter(|o| o.status == OoStatus::Equality).count());
    let oo_violations = count(&|r| r.oo.iter().filter(|o| o.status == OoStatus::Violated).count());
    let ess_violations = count(&|r| r.ess_violations);
    let multiplicity_failures = reports.iter().filter(|r| r.error.is_none() && r.multiplicity_total != r.degree).count();
    let ev_unminimized = reports.iter().filter(|r| r.ev.as_ref().is_some_and(|e| e.non_lambda > 0)).count();
    let errors = reports.iter().filter(|r| r.error.is_some()).count();
    HarnessReport {
        passed: oo_violations == 0 && ess_violations == 0 && multiplicity_failures == 0 && errors == 0,
        curves: reports,
        oo_rows,
        oo_equalities,
        oo_violations,
        ess_violations,
        multiplicity_failures,
        ev_unminimized,
        errors,
    }
}

/// Random perturbed ellipses around pairs of finite marked points, kept when
/// simple, non-peripheral, crossing `T`, clear of marked points (by
/// `1e-3`) and of critical values (by `1e-4`), and unambiguous.
pub fn random_nonperipheral_curves(
    map: &RationalMap,
    circle: &Circle,
    marked: &MarkedPoints,
    count: usize,
    seed: u64,
    vertices: usize,
) -> Vec<PolygonalCurve> {
    let finite: Vec<C64> = marked.points.iter().filter_map(|m| m.point.as_finite()).collect();
    let critical_values: Vec<C64> = map
        .critical_points()
        .map(|cs| cs.iter().filter_map(|c| map.eval(c.point).as_finite()).collect())
        .unwrap_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    if finite.len() < 2 {
        return out;
    }
    let mut attempts = 0;
    while out.len() < count && attempts < 400 * count.max(1) {
        attempts += 1;
        let i = rng.gen_range(0..finite.len());
        let mut j = rng.gen_range(0..finite.len() - 1);
        if j >= i {
            j += 1;
        }
        let (p, q) = (finite[i], finite[j]);
        let span = (q - p).norm();
        let center = (p + q) / 2.0 + C64::from_polar(0.1 * span * rng.gen::<f64>(), TAU * rng.gen::<f64>());
        let a = span / 2.0 * rng.gen_range(1.1..1.7);
        let b = a * rng.gen_range(0.15..0.8);
        let rot = C64::from_polar(1.0, (q - p).arg() + rng.gen_range(-0.2..0.2));
        let modes: Vec<(f64, f64)> = (2..=5).map(|_| (rng.gen_range(0.0..0.06), TAU * rng.gen::<f64>())).collect();
        let pts: Vec<C64> = (0..vertices)
            .map(|k| {
                let t = TAU * k as f64 / vertices as f64;
                let bump: f64 = 1.0 + modes.iter().enumerate().map(|(m, (c, ph))| c * ((m as f64 + 2.0) * t + ph).cos()).sum::<f64>();
                center + rot * C64::new(a * t.cos(), b * t.sin()) * bump
            })
            .collect();
        let Ok(curve) = PolygonalCurve::new(pts) else { continue };
        if !avoids(&curve, marked, 1e-3) || critical_values.iter().any(|&v| distance_to_polygon(&curve.vertices, v) < 1e-4) {
            continue;
        }
        let Ok(seg) = segment_curve(&curve, circle) else { continue };
        if seg.segments.is_empty() {
            continue;
        }
        match classify_curve(&curve, &seg, marked) {
            Ok(c) if !c.peripheral => out.push(curve),
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::MarkedPoint;
    use crate::sphere::Point;

    fn polar(r: f64, turns: f64) -> C64 {
        C64::from_polar(r, TAU * turns)
    }

    fn sector(r0: f64, r1: f64, a: f64, b: f64, m: usize) -> PolygonalCurve {
        let mut v: Vec<C64> = (0..=m).map(|k| polar(r1, a + (b - a) * k as f64 / m as f64)).collect();
        v.extend((0..=m).map(|k| polar(r0, b - (b - a) * k as f64 / m as f64)));
        PolygonalCurve::new(v).unwrap()
    }

    /// The orbit 1/8 → 1/4 → 1/2 → 0 on the unit circle under squaring.
    fn circle_orbit() -> MarkedPoints {
        let angles = [(0.0, 0), (0.125, 2), (0.25, 3), (0.5, 0)];
        MarkedPoints {
            points: angles
                .iter()
                .enumerate()
                .map(|(i, &(a, img))| MarkedPoint {
                    label: format!("t{a}"),
                    point: Point::Finite(polar(1.0, a)),
                    circle_angle: Some(a),
                    in_pf: true,
                    in_pg: false,
                    periodic: i == 0,
                    image: img,
                })
                .collect(),
        }
    }

    #[test]
    fn nested_lift_gives_equality() {
        let map = RationalMap::power(2);
        let marked = circle_orbit();
        // encloses 1/4 and 1/2; its lift around 1/8 and 1/4 is non-peripheral
        let gamma = sector(0.8, 1.2, 0.2, 0.55, 64);
        let rep = run_lemma_harness(&map, &Circle::unit(1024), &marked, &[gamma], 1);
        assert!(rep.passed, "{rep:?}");
        let r = &rep.curves[0];
        assert_eq!(r.multiplicity_total, 2);
        assert_eq!(r.lift_classes.len(), 1);
        let row = r.oo.iter().find(|o| o.point == "t0.125").unwrap();
        assert_eq!((row.lhs, row.rhs, row.status), (1, 1, OoStatus::Equality));
        assert!(r.oo.iter().all(|o| o.status != OoStatus::Violated));
        assert_eq!(eventual_periodicity_bound(&marked), 3);
    }

    #[test]
    fn square_model_without_marked_data_is_vacuous() {
        let map = RationalMap::power(2);
        let c = sector(0.8, 1.2, 0.1, 0.3, 16);
        let rep = run_lemma_harness(&map, &Circle::unit(512), &MarkedPoints::default(), &[c], 1);
        assert!(rep.passed);
        assert!(rep.curves[0].peripheral && rep.curves[0].oo.is_empty());
    }

    #[test]
    fn random_curves_are_non_peripheral() {
        let map = RationalMap::power(2);
        let marked = circle_orbit();
        let circle = Circle::unit(512);
        let cs = random_nonperipheral_curves(&map, &circle, &marked, 5, 7, 128);
        assert_eq!(cs.len(), 5);
        for c in &cs {
            let s = segment_curve(c, &circle).unwrap();
            assert!(!classify_curve(c, &s, &marked).unwrap().peripheral);
        }
        assert_eq!(cs, random_nonperipheral_curves(&map, &circle, &marked, 5, 7, 128));
    }
}
