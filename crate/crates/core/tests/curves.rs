use jmate::curves::{
    random_nonperipheral_curves, run_lemma_harness, segment_curve, Circle, MarkedPoint, MarkedPoints, PolygonalCurve,
    SegmentType,
};
use jmate::geometry::distance_to_polygon;
use jmate::poly::{roots, Poly};
use jmate::realizer::{check_interface, interface_anchors, prepare, realize, MatingSpec, RealizeOptions};
use jmate::{Point, RationalMap, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

fn cubic(a: C64) -> RationalMap {
    RationalMap::polynomial(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), a]).unwrap()
}

/// The realized f⊔g, its invariant interface and its postcritical set.
fn fg() -> (RationalMap, Circle, MarkedPoints) {
    let q = Poly::from_real(&[128.0, 288.0, -1296.0, 11664.0, -13122.0, 59049.0]);
    let near = C64::new(0.0055, 0.4058);
    let a = roots(&q).unwrap().into_iter().min_by(|a, b| (a - near).norm().total_cmp(&(b - near).norm())).unwrap();
    let spec = MatingSpec {
        f: cubic(C64::new(4.0 / 9.0, 0.0)),
        g: cubic(a),
        f_center: C64::new(0.0, 0.0),
        g_center: C64::new(0.0, 0.0),
        d0: 2,
        k: 1,
    };
    let setup = prepare(&spec).unwrap();
    let out = realize(&spec, &setup.family.default_seeds(0, 128), &RealizeOptions::default()).unwrap();
    let m = out.mating().unwrap();
    let anchors = interface_anchors(&out.setup, &m.node_positions);
    let iface = check_interface(&m.map, 2, &anchors, out.setup.degrees, 1024, 200).1.unwrap();
    let marked = MarkedPoints::from_mating(&out.setup, &m.node_positions);
    (m.map.clone(), Circle::from_interface(&iface), marked)
}

/// Even–odd crossing count of a rightward horizontal ray.
fn ray_cast(poly: &[C64], p: C64) -> bool {
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

fn off_circle(z: C64) -> MarkedPoint {
    MarkedPoint {
        label: "probe".into(),
        point: Point::Finite(z),
        circle_angle: None,
        in_pf: true,
        in_pg: false,
        periodic: false,
        image: 0,
    }
}

#[test]
fn fg_postcritical_set() {
    let (_, _, marked) = fg();
    let labels: Vec<(&str, bool, bool, bool)> =
        marked.points.iter().map(|m| (m.label.as_str(), m.in_pf, m.in_pg, m.periodic)).collect();
    assert_eq!(
        labels,
        [
            ("f:c0=g:c0.1", false, true, false),
            ("f:inf", true, false, true),
            ("f:c0.1=g:c0.2", true, true, true),
            ("g:inf", false, true, true),
        ]
    );
}

#[test]
fn membership_agrees_with_ray_casting() {
    let (map, iface, marked) = fg();
    let unit = Circle::unit(1024);
    let mut curves: Vec<(PolygonalCurve, &Circle)> = random_nonperipheral_curves(&map, &iface, &marked, 10, 3, 256)
        .into_iter()
        .map(|c| (c, &iface))
        .collect();
    // wiggly closed curves around the unit circle
    let mut rng = ChaCha8Rng::seed_from_u64(5);
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
            if !segment_curve(&c, &unit).unwrap().segments.is_empty() {
                curves.push((c, &unit));
            }
        }
    }
    let (mut instances, mut disagreements) = (0, 0);
    while instances < 100 {
        let (c, circle) = &curves[rng.gen_range(0..curves.len())];
        let seg = segment_curve(c, circle).unwrap();
        let s = &seg.segments[rng.gen_range(0..seg.segments.len())];
        // segment type against the oracle
        let probe = if s.arc.len() > 2 { s.arc[1] } else { (s.arc[0] + s.arc[1]) / 2.0 };
        if ray_cast(&circle.points, probe) != (s.kind == SegmentType::R) {
            disagreements += 1;
        }
        let (lo, hi) = s.region.iter().fold((s.region[0], s.region[0]), |(lo, hi), z| {
            (C64::new(lo.re.min(z.re), lo.im.min(z.im)), C64::new(hi.re.max(z.re), hi.im.max(z.im)))
        });
        let pad = (hi - lo) * 0.1;
        let z = C64::new(rng.gen_range(lo.re - pad.re..hi.re + pad.re), rng.gen_range(lo.im - pad.im..hi.im + pad.im));
        if distance_to_polygon(&s.region, z) < 1e-9 {
            continue;
        }
        if s.region_contains(&off_circle(z)).unwrap() != ray_cast(&s.region, z) {
            disagreements += 1;
        }
        instances += 1;
    }
    assert_eq!(disagreements, 0);
}

#[test]
fn fg_lemma_harness() {
    let (map, circle, marked) = fg();
    let curves = random_nonperipheral_curves(&map, &circle, &marked, 50, 11, 256);
    assert_eq!(curves.len(), 50);
    let rep = run_lemma_harness(&map, &circle, &marked, &curves, 1);
    assert_eq!(rep.errors, 0, "{:?}", rep.curves.iter().filter_map(|r| r.error.clone()).collect::<Vec<_>>());
    assert_eq!(rep.oo_violations, 0);
    assert_eq!(rep.ess_violations, 0);
    for r in &rep.curves {
        assert_eq!(r.multiplicity_total, 4);
        assert!(r.lift_residual < 1e-8, "{}", r.lift_residual);
        assert!(!r.peripheral);
    }
    assert!(rep.passed);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every vertex of the curve lies in exactly one segment, and the
    /// segments alternate between the two sides.
    #[test]
    fn segmentation_is_a_partition(
        cx in -0.4f64..0.4, cy in -0.4f64..0.4, r in 0.6f64..1.4, amp in 0.0f64..0.35, k in 2u32..6, phase in 0.0f64..1.0
    ) {
        let c0 = C64::new(cx, cy);
        let v: Vec<C64> = (0..200)
            .map(|j| {
                let t = TAU * j as f64 / 200.0;
                c0 + C64::from_polar(r * (1.0 + amp * (k as f64 * t + TAU * phase).sin()), t)
            })
            .collect();
        let c = PolygonalCurve::new(v).unwrap();
        let seg = segment_curve(&c, &Circle::unit(720)).unwrap();
        if seg.segments.is_empty() {
            return Ok(());
        }
        let interior: usize = seg.segments.iter().map(|s| s.arc.len() - 2).sum();
        prop_assert_eq!(interior, c.len());
        for w in seg.segments.windows(2) {
            prop_assert_ne!(w[0].kind, w[1].kind);
        }
        prop_assert_eq!(seg.k * 2, seg.segments.len());
    }
}
