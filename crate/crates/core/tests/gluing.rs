use jmate::boettcher::BoettcherChart;
use jmate::gluing::{build_gluing, build_gluing_with_rotation, verify_gluing, verify_model, TopologicalMatingModel};
use jmate::poly::{roots, Poly};
use jmate::{RationalMap, C64};

fn cubic(a: C64) -> RationalMap {
    RationalMap::polynomial(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), a]).unwrap()
}

fn charts() -> (BoettcherChart, BoettcherChart) {
    let q = Poly::from_real(&[128.0, 288.0, -1296.0, 11664.0, -13122.0, 59049.0]);
    let near = C64::new(0.0055, 0.4058);
    let a = roots(&q).unwrap().into_iter().min_by(|a, b| (a - near).norm().total_cmp(&(b - near).norm())).unwrap();
    let z = C64::new(0.0, 0.0);
    (
        BoettcherChart::new(&cubic(C64::new(4.0 / 9.0, 0.0)), z, 2).unwrap(),
        BoettcherChart::new(&cubic(a), z, 2).unwrap(),
    )
}

#[test]
fn fg_gluing_is_orientation_reversing_and_equivariant() {
    let (cf, cg) = charts();
    let t = std::time::Instant::now();
    let g = build_gluing(&cf, &cg, 1, 2048, 1e-4).unwrap();
    let rep = verify_gluing(&g, 1e-5);
    eprintln!("{:?} {rep:?}", t.elapsed());
    assert_eq!(rep.winding, -1);
    assert!(rep.monotone_decreasing);
    assert!(rep.equivariance_defect < 1e-5, "{rep:?}");
    let bad = build_gluing_with_rotation(&cf, &cg, 1.0 / 6.0, 2048, 1e-4).unwrap();
    assert!(verify_gluing(&bad, 1e-5).equivariance_defect > 1e-2);
}

#[test]
fn fg_model_on_and_across_circle() {
    let (cf, cg) = charts();
    let t = std::time::Instant::now();
    let g = build_gluing(&cf, &cg, 1, 64, 1e-4).unwrap();
    let m = TopologicalMatingModel::new(g, 4096).unwrap();
    let rep = verify_model(&m, 512, 1e-4).unwrap();
    eprintln!("{:?} {rep:?}", t.elapsed());
    assert!(rep.circle_angle_error < 1e-3);
    assert!(rep.continuity_defect < 1e-3);
}
