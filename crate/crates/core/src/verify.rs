//! Property suites behind `jm verify` and the acceptance tests.
//!
//! Every check is a pure function of its inputs and seed, and its report
//! holds no timings, so repeated runs serialize identically.

use crate::boettcher::BoettcherChart;
use crate::config::{Config, ResolvedMap};
use crate::curves::{
    eventual_periodicity_bound, random_nonperipheral_curves, run_lemma_harness, segment_curve, Circle, HarnessReport, MarkedPoint, MarkedPoints,
    PolygonalCurve, SegmentType,
};
use crate::error::{Error, Result};
use crate::geometry::distance_to_polygon;
use crate::gluing::{build_gluing, build_gluing_with_rotation, verify_gluing, verify_model, GluingReport, ModelReport, TopologicalMatingModel};
use crate::portrait::portrait_of;
use crate::rational::RationalMap;
use crate::realizer::{
    check_interface, interface_anchors, realize, verify_realization, Interface, MatingSpec, RealizationOutcome,
    RealizeOptions, RealizedMating, VerificationReport,
};
use crate::render::{attracting_cycles, render, Label, Raster, Viewport};
use crate::sphere::{Point, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

/// Relation tolerance for the realized matings.
pub const RELATION_TOL: f64 = 1e-10;
/// Tolerance for the trivial mating and the family solves.
pub const EXACT_TOL: f64 = 1e-12;
pub const FUNCTIONAL_TOL: f64 = 1e-8;
pub const ROUND_TRIP_TOL: f64 = 1e-7;
pub const EQUIVARIANCE_TOL: f64 = 1e-5;
/// The wrong-rotation control must exceed this defect.
pub const CONTROL_DEFECT: f64 = 1e-2;
pub const MODEL_TOL: f64 = 1e-3;
pub const BOUNDARY_SAMPLES: usize = 1024;
pub const BOUNDARY_EPSILON: f64 = 1e-4;

/// Sizes of the randomized checks.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub preimage_samples: usize,
    pub basin_samples: usize,
    /// Side of the basin classification grid.
    pub grid: usize,
    pub render_pixels: usize,
    pub model_samples: usize,
    pub membership_instances: usize,
    pub lemma_curves: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            preimage_samples: 100,
            basin_samples: 1000,
            grid: 1000,
            render_pixels: 512,
            model_samples: 512,
            membership_instances: 100,
            lemma_curves: 50,
        }
    }
}

/// A map pair, its realization and the selected mating.
pub struct Realized {
    pub f: ResolvedMap,
    pub g: ResolvedMap,
    pub spec: MatingSpec,
    pub outcome: RealizationOutcome,
}

impl Realized {
    pub fn from_config(cfg: &Config) -> Result<Realized> {
        let (f, g, spec) = cfg.mating()?;
        let setup = crate::realizer::prepare(&spec)?;
        let n_maps = cfg.mate.as_ref().map_or(128, |m| m.seed_maps);
        let seeds = setup.family.default_seeds(cfg.seed, n_maps);
        let opts = RealizeOptions { tol: cfg.accept_tol, ..RealizeOptions::default() };
        let outcome = realize(&spec, &seeds, &opts)?;
        Ok(Realized { f, g, spec, outcome })
    }

    pub fn mating(&self) -> Result<&RealizedMating> {
        self.outcome
            .mating()
            .ok_or_else(|| Error::NoRealization(format!("no realization of {} ⊔ {} has a Jordan interface", self.f.name, self.g.name)))
    }

    /// The invariant interface of the mating, sampled at `n` points.
    pub fn interface(&self, n: usize) -> Result<Interface> {
        let m = self.mating()?;
        let anchors = interface_anchors(&self.outcome.setup, &m.node_positions);
        check_interface(&m.map, self.spec.d0, &anchors, self.outcome.setup.degrees, n, 200)
            .1
            .ok_or_else(|| Error::NoRealization("interface pullback failed".into()))
    }

    pub fn marked(&self) -> Result<MarkedPoints> {
        Ok(MarkedPoints::from_mating(&self.outcome.setup, &self.mating()?.node_positions))
    }

    pub fn verify(&self, samples: usize, grid: usize, seed: u64) -> Result<VerificationReport> {
        let setup = &self.outcome.setup;
        verify_realization(self.mating()?, &setup.family, &setup.merged, RELATION_TOL, samples, grid, seed)
    }
}

/// One line of a suite.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub details: serde_json::Value,
}

impl CheckReport {
    fn new<T: Serialize>(id: usize, name: &str, passed: bool, details: &T) -> CheckReport {
        CheckReport {
            id,
            name: name.into(),
            passed,
            details: serde_json::to_value(details).unwrap_or_else(|e| serde_json::Value::String(e.to_string())),
        }
    }

    fn failed(id: usize, name: &str, err: &Error) -> CheckReport {
        CheckReport { id, name: name.into(), passed: false, details: serde_json::json!({ "error": err.to_string() }) }
    }

    /// Runs `body`, turning an error into a failed check.
    pub fn run(id: usize, name: &str, body: impl FnOnce() -> Result<CheckReport>) -> CheckReport {
        body().unwrap_or_else(|e| CheckReport::failed(id, name, &e))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub options: SuiteOptions,
    pub checks: Vec<CheckReport>,
    pub passed: bool,
}

// ---------------------------------------------------------------- degrees

#[derive(Clone, Debug, Serialize)]
pub struct DegreeRow {
    pub pair: String,
    pub expected: usize,
    pub normal_form_degree: usize,
    pub numerator_degree: usize,
    pub denominator_degree: usize,
    pub preimage_samples: usize,
    pub preimage_failures: usize,
    pub max_preimage_error: f64,
    pub passed: bool,
}

/// Degree law `deg = deg f + deg g − d0` on the three standard pairs, by
/// exact coefficient degrees and by preimage counts at random points.
pub fn check_degrees(opts: &SuiteOptions) -> CheckReport {
    const NAME: &str = "degree law";
    CheckReport::run(1, NAME, || {
        let mut rows = Vec::new();
        for (name, expected) in [("z2z2", 2), ("z2f", 3), ("fg", 4)] {
            let r = Realized::from_config(&Config::builtin(name)?)?;
            let m = r.mating()?;
            let rep = r.verify(opts.preimage_samples, 0, opts.seed)?;
            let nd = m.map.num_poly().degree();
            let dd = m.map.den_poly().degree();
            let exact = nd.max(dd);
            rows.push(DegreeRow {
                pair: format!("{} ⊔ {}", r.f.name, r.g.name),
                expected,
                normal_form_degree: r.outcome.setup.family.degree,
                numerator_degree: nd,
                denominator_degree: dd,
                preimage_samples: rep.preimage_samples,
                preimage_failures: rep.preimage_failures,
                max_preimage_error: rep.max_preimage_error,
                passed: exact == expected && r.outcome.setup.family.degree == expected && rep.preimage_failures == 0,
            });
        }
        let passed = rows.iter().all(|r| r.passed);
        Ok(CheckReport::new(1, NAME, passed, &rows))
    })
}

// ---------------------------------------------------------------- z² ⊔ z²

#[derive(Clone, Debug, Serialize)]
pub struct TrivialMating {
    pub map: RationalMap,
    pub coefficient_error: f64,
    pub max_residual: f64,
    pub max_relation_residual: f64,
}

/// `z² ⊔ z²` realizes to `w²`.
pub fn check_trivial_mating(opts: &SuiteOptions) -> CheckReport {
    const NAME: &str = "z^2 mated with z^2";
    CheckReport::run(2, NAME, || {
        let r = Realized::from_config(&Config::builtin("z2z2")?)?;
        let m = r.mating()?;
        let rep = r.verify(opts.preimage_samples, 0, opts.seed)?;
        let target = RationalMap::power(2);
        let coefficient_error = coefficient_distance(&m.map, &target);
        let t = TrivialMating {
            map: m.map.clone(),
            coefficient_error,
            max_residual: m.max_residual,
            max_relation_residual: rep.max_relation_residual,
        };
        let passed = coefficient_error < EXACT_TOL && m.max_residual < EXACT_TOL && rep.max_relation_residual < EXACT_TOL;
        Ok(CheckReport::new(2, NAME, passed, &t))
    })
}

/// Largest coefficient difference after normalizing both leading
/// denominator coefficients to 1.
fn coefficient_distance(a: &RationalMap, b: &RationalMap) -> f64 {
    let norm = |m: &RationalMap| -> (Vec<C64>, Vec<C64>) {
        let lead = *m.den.iter().rev().find(|c| c.norm() > 0.0).unwrap_or(&C64::new(1.0, 0.0));
        (m.num.iter().map(|c| c / lead).collect(), m.den.iter().map(|c| c / lead).collect())
    };
    let (an, ad) = norm(a);
    let (bn, bd) = norm(b);
    let diff = |x: &[C64], y: &[C64]| -> f64 {
        (0..x.len().max(y.len()))
            .map(|i| (x.get(i).copied().unwrap_or_default() - y.get(i).copied().unwrap_or_default()).norm())
            .fold(0.0, f64::max)
    };
    diff(&an, &bn).max(diff(&ad, &bd))
}

// ---------------------------------------------------------------- families

#[derive(Clone, Debug, Serialize)]
pub struct FamilyRow {
    pub family: String,
    pub solutions: usize,
    pub params: Vec<C64>,
    pub residual: f64,
    pub attracted: bool,
    pub boundary_angle: Option<(u64, u64)>,
    /// Distance to the expected parameter, for the control.
    pub control_error: Option<f64>,
    pub passed: bool,
}

/// The two relation families, plus the fixed-critical-point control at
/// `a = −2/9`.
pub fn check_families(opts: &SuiteOptions) -> CheckReport {
    const NAME: &str = "family solves";
    CheckReport::run(3, NAME, || {
        let mut rows = Vec::new();
        for (name, control) in [("f", None), ("g", None), ("fixed", Some(C64::new(-2.0 / 9.0, 0.0)))] {
            let cfg = Config::builtin(name)?;
            let source = cfg.map.as_ref().ok_or_else(|| Error::Invalid(format!("{name} has no map")))?;
            let m = source.resolve(opts.seed ^ cfg.seed, cfg.tol)?;
            let s = m.solution.as_ref().ok_or_else(|| Error::NoRealization(name.into()))?;
            let attracted = s.attracted.values().any(|&a| a);
            let control_error = control.map(|a| {
                m.all_solutions.iter().map(|s| (s.params[0] - a).norm()).fold(f64::INFINITY, f64::min)
            });
            let passed = s.residual < EXACT_TOL && !attracted && control_error.is_none_or(|e| e < EXACT_TOL);
            rows.push(FamilyRow {
                family: name.into(),
                solutions: m.all_solutions.len(),
                params: s.params.clone(),
                residual: s.residual,
                attracted,
                boundary_angle: s.boundary_angles.values().flatten().next().copied(),
                control_error,
                passed,
            });
        }
        let passed = rows.iter().all(|r| r.passed);
        Ok(CheckReport::new(3, NAME, passed, &rows))
    })
}

// ---------------------------------------------------------------- Böttcher

#[derive(Clone, Debug, Serialize)]
pub struct ChartRow {
    pub chart: String,
    pub samples: usize,
    pub max_functional_residual: f64,
    /// `max |φ(φ⁻¹(w)) − w|`.
    pub max_forward_round_trip: f64,
    /// `max |φ⁻¹(φ(z)) − z|`.
    pub max_backward_round_trip: f64,
    pub boundary_simple: bool,
    pub boundary_error: Option<String>,
    pub passed: bool,
}

/// Functional equation and round trips at `n` basin points `z = φ⁻¹(w)`,
/// `w` area-uniform in the disc of radius `1 − ε`; boundary polygon
/// simplicity at the reference resolution.
pub fn chart_row(name: &str, chart: &BoettcherChart, n: usize, seed: u64) -> Result<ChartRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ws: Vec<C64> = (0..n)
        .map(|_| C64::from_polar((1.0 - BOUNDARY_EPSILON) * rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>()))
        .collect();
    let rows = ws
        .par_iter()
        .map(|&w| {
            let z = chart.inverse(w)?;
            let phi = chart.value(Point::Finite(z))?;
            let back = chart.inverse(phi)?;
            Ok((chart.functional_residual(z)?, (phi - w).norm(), (back - z).norm()))
        })
        .collect::<Result<Vec<(f64, f64, f64)>>>()?;
    let max = |k: fn(&(f64, f64, f64)) -> f64| rows.iter().map(k).fold(0.0, f64::max);
    let boundary = chart.boundary_parametrization(BOUNDARY_SAMPLES, BOUNDARY_EPSILON);
    let mut row = ChartRow {
        chart: name.into(),
        samples: n,
        max_functional_residual: max(|r| r.0),
        max_forward_round_trip: max(|r| r.1),
        max_backward_round_trip: max(|r| r.2),
        boundary_simple: boundary.is_ok(),
        boundary_error: boundary.err().map(|e| e.to_string()),
        passed: false,
    };
    row.passed = row.max_functional_residual < FUNCTIONAL_TOL
        && row.max_forward_round_trip < ROUND_TRIP_TOL
        && row.max_backward_round_trip < ROUND_TRIP_TOL
        && row.boundary_simple;
    Ok(row)
}

fn fg_charts(seed: u64) -> Result<(ResolvedMap, ResolvedMap, BoettcherChart, BoettcherChart)> {
    let cfg = Config::builtin("fg")?;
    let m = cfg.mate.as_ref().ok_or_else(|| Error::Invalid("fg has no mate section".into()))?;
    let f = m.f.resolve(seed ^ cfg.seed, cfg.tol)?;
    let g = m.g.resolve(seed ^ cfg.seed, cfg.tol)?;
    let cf = BoettcherChart::new(&f.map, f.center, f.d0)?;
    let cg = BoettcherChart::new(&g.map, g.center, g.d0)?;
    Ok((f, g, cf, cg))
}

/// Böttcher charts of `z²`, `f` and `g`.
pub fn check_boettcher(opts: &SuiteOptions) -> CheckReport {
    const NAME: &str = "Boettcher charts";
    CheckReport::run(4, NAME, || {
        let (_, _, cf, cg) = fg_charts(opts.seed)?;
        let sq = BoettcherChart::new(&RationalMap::power(2), C64::new(0.0, 0.0), 2)?;
        let rows = [("z^2", &sq), ("f", &cf), ("g", &cg)]
            .iter()
            .enumerate()
            .map(|(i, (name, c))| chart_row(name, c, opts.basin_samples, opts.seed.wrapping_add(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let passed = rows.iter().all(|r| r.passed);
        Ok(CheckReport::new(4, NAME, passed, &rows))
    })
}

// ---------------------------------------------------------------- gluing

/// Rotation of the negative control: not `k/(d0 − 1)` for any `k`.
pub const CONTROL_ROTATION: f64 = 1.0 / 6.0;

#[derive(Clone, Debug, Serialize)]
pub struct GluingCheck {
    pub gluing: GluingReport,
    pub control: GluingReport,
}

/// Boundary gluing of `f ⊔ g`: orientation, monotonicity, equivariance, and
/// a wrong-rotation control that must break equivariance.
pub fn check_gluing(opts: &SuiteOptions, samples: usize, epsilon: f64) -> CheckReport {
    const NAME: &str = "boundary gluing";
    CheckReport::run(5, NAME, || {
        let (_, _, cf, cg) = fg_charts(opts.seed)?;
        let g = build_gluing(&cf, &cg, 1, samples, epsilon)?;
        let gluing = verify_gluing(&g, EQUIVARIANCE_TOL);
        let bad = build_gluing_with_rotation(&cf, &cg, CONTROL_ROTATION, samples, epsilon)?;
        let control = verify_gluing(&bad, EQUIVARIANCE_TOL);
        let passed = gluing.winding == -1
            && gluing.monotone_decreasing
            && gluing.equivariance_defect < EQUIVARIANCE_TOL
            && control.equivariance_defect > CONTROL_DEFECT;
        Ok(CheckReport::new(5, NAME, passed, &GluingCheck { gluing, control }))
    })
}

// ---------------------------------------------------------------- model

/// Correspondence samples for the model's gluing (the model evaluates the
/// charts directly and only uses the rotation).
const MODEL_GLUING_SAMPLES: usize = 64;

/// The topological model on `T` and across it.
pub fn check_model(opts: &SuiteOptions, collar: usize, epsilon: f64) -> CheckReport {
    const NAME: &str = "topological model";
    CheckReport::run(6, NAME, || {
        let (_, _, cf, cg) = fg_charts(opts.seed)?;
        let g = build_gluing(&cf, &cg, 1, MODEL_GLUING_SAMPLES, epsilon)?;
        let model = TopologicalMatingModel::new(g, collar)?;
        let rep: ModelReport = verify_model(&model, opts.model_samples, 1e-4)?;
        let passed = rep.circle_angle_error < MODEL_TOL && rep.continuity_defect < MODEL_TOL;
        Ok(CheckReport::new(6, NAME, passed, &rep))
    })
}

// ---------------------------------------------------------------- realized f ⊔ g

#[derive(Clone, Debug, Serialize)]
pub struct RealizedCheck {
    pub map: RationalMap,
    pub verification: VerificationReport,
    /// The invariant interface separating the basin systems is a simple
    /// closed curve with the poles and zeros on the sides the gluing fixes.
    pub interface_jordan: bool,
    pub render_pixels: (usize, usize),
    /// Pixel count per basin of the rendered image.
    pub render_basins: Vec<usize>,
    pub render_julia: usize,
}

/// Basin pixel counts of a raster (index = attracting cycle) and the number
/// of unclassified pixels.
pub fn basin_histogram(r: &Raster, cycles: usize) -> (Vec<usize>, usize) {
    let mut counts = vec![0; cycles];
    let mut julia = 0;
    for l in &r.labels {
        match l {
            Label::Basin { cycle, .. } => counts[*cycle] += 1,
            Label::Julia => julia += 1,
        }
    }
    (counts, julia)
}

/// Viewport covering the postcritical positions of a realization.
pub fn mating_viewport(m: &RealizedMating, px: usize) -> Viewport {
    Viewport::covering(&m.node_positions, px)
}

/// The realized `f ⊔ g`: relations, exactly two attracting cycles on the
/// classification grid, a Jordan interface between the basin systems, and a
/// render showing both (each covering at least 1% of the image).
pub fn realized_fg(opts: &SuiteOptions) -> Result<(CheckReport, Raster)> {
    const NAME: &str = "realized f mated with g";
    let r = Realized::from_config(&Config::builtin("fg")?)?;
    let m = r.mating()?;
    let verification = r.verify(opts.preimage_samples, opts.grid, opts.seed)?;
    let cycles = attracting_cycles(&m.map, &portrait_of(&m.map, 64, 1e-7)?);
    let raster = render(&m.map, &cycles, &mating_viewport(m, opts.render_pixels), 500);
    let (render_basins, render_julia) = basin_histogram(&raster, cycles.len());
    let total = raster.labels.len();
    let interface_jordan = m.is_mating();
    let passed = interface_jordan
        && verification.max_relation_residual < RELATION_TOL
        && verification.attracting_cycles == 2
        && verification.basins_seen == 2
        && render_basins.len() == 2
        && render_basins.iter().all(|&c| c * 100 >= total);
    let rep = RealizedCheck {
        map: m.map.clone(),
        verification,
        interface_jordan,
        render_pixels: raster.viewport.pixels,
        render_basins,
        render_julia,
    };
    Ok((CheckReport::new(7, NAME, passed, &rep), raster))
}

pub fn check_realized(opts: &SuiteOptions) -> CheckReport {
    CheckReport::run(7, "realized f mated with g", || realized_fg(opts).map(|r| r.0))
}

// ---------------------------------------------------------------- curves

/// Even–odd crossing count of a rightward horizontal ray.
pub fn ray_cast(poly: &[C64], p: C64) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.im > p.im) != (b.im > p.im) {
            let x = a.re + (p.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if x > p.re {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipCheck {
    pub curves: usize,
    pub instances: usize,
    pub side_disagreements: usize,
    pub region_disagreements: usize,
}

/// Segment sides and region membership against ray casting, on random
/// segments of random curves (half crossing the `f ⊔ g` interface, half
/// wiggles around the unit circle) and random probe points.
pub fn membership_vs_ray_casting(
    map: &RationalMap,
    iface: &Circle,
    marked: &MarkedPoints,
    instances: usize,
    seed: u64,
) -> Result<MembershipCheck> {
    let unit = Circle::unit(1024);
    let mut curves: Vec<(PolygonalCurve, &Circle)> =
        random_nonperipheral_curves(map, iface, marked, 10, seed, 256).into_iter().map(|c| (c, iface)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    while curves.len() < 20 {
        let c0 = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let (k, amp, r) = (rng.gen_range(2..7) as f64, rng.gen_range(0.05..0.4), rng.gen_range(0.7..1.3));
        let v: Vec<C64> = (0..300)
            .map(|j| {
                let t = TAU * j as f64 / 300.0;
                c0 + C64::from_polar(r * (1.0 + amp * (k * t).sin()), t)
            })
            .collect();
        if let Ok(c) = PolygonalCurve::new(v) {
            if !segment_curve(&c, &unit)?.segments.is_empty() {
                curves.push((c, &unit));
            }
        }
    }
    let probe_point = |z: C64| MarkedPoint {
        label: "probe".into(),
        point: Point::Finite(z),
        circle_angle: None,
        in_pf: true,
        in_pg: false,
        periodic: false,
        image: 0,
    };
    let mut rep = MembershipCheck { curves: curves.len(), instances: 0, side_disagreements: 0, region_disagreements: 0 };
    while rep.instances < instances {
        let (c, circle) = &curves[rng.gen_range(0..curves.len())];
        let seg = segment_curve(c, circle)?;
        let s = &seg.segments[rng.gen_range(0..seg.segments.len())];
        let probe = if s.arc.len() > 2 { s.arc[1] } else { (s.arc[0] + s.arc[1]) / 2.0 };
        if ray_cast(&circle.points, probe) != (s.kind == SegmentType::R) {
            rep.side_disagreements += 1;
        }
        let (lo, hi) = s.region.iter().fold((s.region[0], s.region[0]), |(lo, hi), z| {
            (C64::new(lo.re.min(z.re), lo.im.min(z.im)), C64::new(hi.re.max(z.re), hi.im.max(z.im)))
        });
        let pad = (hi - lo) * 0.1;
        let z = C64::new(rng.gen_range(lo.re - pad.re..hi.re + pad.re), rng.gen_range(lo.im - pad.im..hi.im + pad.im));
        if distance_to_polygon(&s.region, z) < 1e-9 {
            continue;
        }
        if s.region_contains(&probe_point(z))? != ray_cast(&s.region, z) {
            rep.region_disagreements += 1;
        }
        rep.instances += 1;
    }
    Ok(rep)
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvesCheck {
    pub membership: MembershipCheck,
    pub degree: usize,
    pub curves: usize,
    pub oo_rows: usize,
    pub oo_violations: usize,
    pub ess_violations: usize,
    pub multiplicity_failures: usize,
    pub errors: usize,
    pub peripheral: usize,
    pub max_lift_residual: f64,
}

/// Everything the curves check needs from the realized `f ⊔ g`.
pub struct CurveSetting {
    pub map: RationalMap,
    pub circle: Circle,
    pub marked: MarkedPoints,
}

impl CurveSetting {
    pub fn new(r: &Realized, interface_samples: usize) -> Result<CurveSetting> {
        let iface = r.interface(interface_samples)?;
        Ok(CurveSetting { map: r.mating()?.map.clone(), circle: Circle::from_interface(&iface), marked: r.marked()? })
    }
}

/// Membership oracle, the lemma harness on random non-peripheral curves and
/// pullback multiplicity totals.
pub fn curves_fg(opts: &SuiteOptions, vertices: usize) -> Result<(CheckReport, HarnessReport)> {
    const NAME: &str = "curve calculus";
    let s = CurveSetting::new(&Realized::from_config(&Config::builtin("fg")?)?, 1024)?;
    let membership = membership_vs_ray_casting(&s.map, &s.circle, &s.marked, opts.membership_instances, opts.seed.wrapping_add(3))?;
    let curves = random_nonperipheral_curves(&s.map, &s.circle, &s.marked, opts.lemma_curves, opts.seed.wrapping_add(11), vertices);
    let h = run_lemma_harness(&s.map, &s.circle, &s.marked, &curves, eventual_periodicity_bound(&s.marked));
    let c = CurvesCheck {
        membership,
        degree: s.map.degree(),
        curves: curves.len(),
        oo_rows: h.oo_rows,
        oo_violations: h.oo_violations,
        ess_violations: h.ess_violations,
        multiplicity_failures: h.multiplicity_failures,
        errors: h.errors,
        peripheral: h.curves.iter().filter(|r| r.peripheral).count(),
        max_lift_residual: h.curves.iter().map(|r| r.lift_residual).fold(0.0, f64::max),
    };
    let passed = c.membership.side_disagreements == 0
        && c.membership.region_disagreements == 0
        && c.membership.instances == opts.membership_instances
        && c.curves == opts.lemma_curves
        && c.peripheral == 0
        && c.errors == 0
        && c.oo_violations == 0
        && c.multiplicity_failures == 0
        && h.curves.iter().all(|r| r.multiplicity_total == c.degree);
    Ok((CheckReport::new(8, NAME, passed, &c), h))
}

pub fn check_curves(opts: &SuiteOptions) -> CheckReport {
    CheckReport::run(8, "curve calculus", || curves_fg(opts, 256).map(|r| r.0))
}

/// Criteria 1–8 in order.
pub fn run_all(opts: &SuiteOptions) -> SuiteReport {
    let gl = crate::config::GluingConfig::default();
    let checks = vec![
        check_degrees(opts),
        check_trivial_mating(opts),
        check_families(opts),
        check_boettcher(opts),
        check_gluing(opts, gl.samples, gl.epsilon),
        check_model(opts, gl.collar, gl.epsilon),
        check_realized(opts),
        check_curves(opts),
    ];
    let passed = checks.iter().all(|c| c.passed);
    SuiteReport { options: *opts, checks, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_cast_square() {
        let sq = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 1.0), C64::new(0.0, 1.0)];
        assert!(ray_cast(&sq, C64::new(0.5, 0.5)));
        assert!(!ray_cast(&sq, C64::new(1.5, 0.5)));
    }

    #[test]
    fn square_chart_row() {
        let sq = BoettcherChart::new(&RationalMap::power(2), C64::new(0.0, 0.0), 2).unwrap();
        let row = chart_row("z^2", &sq, 200, 1).unwrap();
        assert!(row.passed, "{row:?}");
        assert!(row.max_functional_residual < 1e-14);
    }

    #[test]
    fn trivial_mating_passes() {
        let c = check_trivial_mating(&SuiteOptions::default());
        assert!(c.passed, "{c:?}");
    }
}
