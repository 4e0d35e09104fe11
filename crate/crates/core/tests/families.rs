use jmate::portrait::{solve_family, CompiledFamily, FamilySpec, SeedSpec};
use jmate::C64;
use std::collections::BTreeMap;

fn cubic(relations: &[&str]) -> FamilySpec {
    FamilySpec {
        name: "z^2 + a z^3".into(),
        parameters: vec!["a".into()],
        numerator: vec!["0".into(), "0".into(), "1".into(), "a".into()],
        denominator: vec!["1".into()],
        points: BTreeMap::from([("c".to_string(), "-2/(3*a)".to_string())]),
        marked_center: "0".into(),
        d0: 2,
        relations: relations.iter().map(|s| s.to_string()).collect(),
        seeds: SeedSpec::default(),
    }
}

/// f^2(c) - f(c) for c = -2/(3a) clears to (9a+2)^2 (9a-4) up to a unit, so
/// the only root with minimal preperiod is a = 4/9.
#[test]
fn preperiodic_family_has_single_solution() {
    let spec = cubic(&["f^2(c) = f(c)"]);
    let fam = CompiledFamily::new(&spec).unwrap();
    let out = solve_family(&spec, &fam.default_seeds(0), 1e-12).unwrap();
    assert_eq!(out.solutions.len(), 1, "{:?}", out.notes);
    let s = &out.solutions[0];
    assert!((s.params[0] - C64::new(4.0 / 9.0, 0.0)).norm() < 1e-12);
    assert!(s.residual < 1e-12);
    assert!(!s.attracted["c"]);
    // c = -3/2 lands at angle 1/2 of the basin of 0
    assert_eq!(s.boundary_angles["c"], Some((1, 2)));
}

fn quintic(a: C64) -> C64 {
    let coeffs = [128.0, 288.0, -1296.0, 11664.0, -13122.0, 59049.0];
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &k| acc * a + k)
}

/// g^3(c) - g^2(c) clears to -(9a-4)(9a+2)^3 Q(a) with Q the quintic above;
/// the linear factors violate minimality, so solutions are the roots of Q.
#[test]
fn periodic_tail_family_matches_quintic() {
    let spec = cubic(&["g^3(c) = g^2(c) != g(c)"]);
    let fam = CompiledFamily::new(&spec).unwrap();
    let out = solve_family(&spec, &fam.default_seeds(0), 1e-12).unwrap();
    let found: Vec<_> = out.solutions.iter().map(|s| s.params[0]).collect();
    assert_eq!(out.solutions.len(), 5, "{found:?} {:?}", out.notes);
    for s in &out.solutions {
        let a = s.params[0];
        assert!(quintic(a).norm() < 1e-6 * 59049.0, "a = {a}");
        let c = -2.0 / (3.0 * a);
        let idx = s.portrait.nodes.iter().position(|n| n.point.unwrap().chordal(&jmate::Point::Finite(c)) < 1e-9).unwrap();
        assert_eq!(s.portrait.orbit_shape(idx), (2, 1));
    }
    let on_boundary: Vec<_> = out.solutions.iter().filter(|s| s.boundary_angles["c"].is_some()).collect();
    assert_eq!(on_boundary.len(), 2);
    for s in on_boundary {
        assert!((s.params[0].re - 0.0055424091852669).abs() < 1e-10);
        assert!((s.params[0].im.abs() - 0.4057814923715366).abs() < 1e-10);
    }
}


