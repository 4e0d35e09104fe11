use jmate::poly::{roots, Poly};
use jmate::portrait::portrait_of;
use jmate::realizer::{
    build_family, prepare, realize, relation_residuals_near, verify_realization, MatingSpec, RealizeOptions,
};
use jmate::{RationalMap, C64};

fn cubic(a: C64) -> RationalMap {
    RationalMap::polynomial(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), a]).unwrap()
}

fn f_map() -> RationalMap {
    cubic(C64::new(4.0 / 9.0, 0.0))
}

/// Root of 59049a⁵ − 13122a⁴ + 11664a³ − 1296a² + 288a + 128 in the upper
/// half plane whose critical point lies on the basin boundary.
fn g_map() -> RationalMap {
    let q = Poly::from_real(&[128.0, 288.0, -1296.0, 11664.0, -13122.0, 59049.0]);
    let near = C64::new(0.0055, 0.4058);
    let a = roots(&q)
        .unwrap()
        .into_iter()
        .min_by(|a, b| (a - near).norm().total_cmp(&(b - near).norm()))
        .unwrap();
    cubic(a)
}

fn spec(f: RationalMap, g: RationalMap) -> MatingSpec {
    MatingSpec { f, g, f_center: C64::new(0.0, 0.0), g_center: C64::new(0.0, 0.0), d0: 2, k: 1 }
}

fn solve(s: &MatingSpec) -> jmate::realizer::RealizationOutcome {
    let setup = prepare(s).unwrap();
    let seeds = setup.family.default_seeds(0, 128);
    realize(s, &seeds, &RealizeOptions::default()).unwrap()
}

#[test]
fn squares_mate_to_square() {
    let s = spec(RationalMap::power(2), RationalMap::power(2));
    let out = realize(&s, &[], &RealizeOptions::default()).unwrap();
    assert_eq!(out.setup.family.unknown_count(), 0);
    assert_eq!(out.solutions.len(), 1);
    let m = out.mating().unwrap();
    assert_eq!(m.map, RationalMap::power(2));
    assert!(m.max_residual < 1e-12);
    let rep = verify_realization(m, &out.setup.family, &out.setup.merged, 1e-10, 100, 64, 3).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn square_with_f_has_degree_three() {
    let out = solve(&spec(RationalMap::power(2), f_map()));
    let fam = &out.setup.family;
    assert_eq!((fam.degree, fam.m_inf, fam.m0), (3, 2, 3));
    let m = out.mating().expect("a realization with a Jordan interface");
    assert_eq!(m.map.degree(), 3);
    assert!(m.residuals.iter().all(|r| r.1 < 1e-10), "{:?}", m.residuals);
    let rep = verify_realization(m, fam, &out.setup.merged, 1e-10, 100, 96, 5).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn fg_mating_is_selected_by_the_interface() {
    let out = solve(&spec(f_map(), g_map()));
    let fam = &out.setup.family;
    assert_eq!((fam.degree, fam.m0, fam.m_inf), (4, 3, 3));
    let rel: Vec<&str> = fam.relations.iter().map(|r| r.text.as_str()).collect();
    assert_eq!(rel, ["R^2(c1) = R(c1)", "R(c2) = c1"]);
    // the merged portrait realizes several times (with conjugate pairs and a
    // side-exchanged realization); only one passes the interface test
    assert!(out.solutions.len() >= 4);
    let matings: Vec<_> = out.solutions.iter().filter(|s| s.is_mating()).collect();
    assert_eq!(matings.len(), 1);
    let m = matings[0];
    // R = z³(z + p)/(q z + r)
    let (p, r, q) = (m.map.num[3], m.map.den[0], m.map.den[1]);
    assert!((p - C64::new(-1.4698840387154766, -0.0541802284441108)).norm() < 1e-9, "{p}");
    assert!((q - C64::new(0.8400637655298657, 0.0242360421307669)).norm() < 1e-9, "{q}");
    assert!((r - C64::new(0.0372999556212771, -0.2334484959682715)).norm() < 1e-9, "{r}");
    // the side-exchanged realization is present but rejected
    assert!(out.solutions.iter().any(|s| (s.map.num[3] - C64::new(0.4594150883582285, -3.525092760649889)).norm() < 1e-9));

    let rep = verify_realization(m, fam, &out.setup.merged, 1e-10, 100, 200, 1).unwrap();
    assert!(rep.passed, "{rep:?}");
    assert_eq!(rep.preimage_failures, 0);
    assert!(rep.max_relation_residual < 1e-10);
    assert_eq!(rep.basins_seen, 2);

    // portrait fidelity
    let rp = portrait_of(&m.map, 64, 1e-7).unwrap();
    assert_eq!(rp.nodes.len(), out.setup.merged.nodes.len());
    assert_eq!(m.portrait_match.len(), rp.nodes.len());

    // negative control: a 1e-3 coefficient perturbation breaks a relation
    let mut bumped = m.map.clone();
    bumped.num[3] += C64::new(1e-3, 0.0);
    let res = relation_residuals_near(fam, &bumped, &m.free_critical_points).unwrap();
    assert!(res.iter().cloned().fold(0.0, f64::max) > 1e-4, "{res:?}");
}

#[test]
fn realization_is_deterministic() {
    let a = solve(&spec(RationalMap::power(2), f_map()));
    let b = solve(&spec(RationalMap::power(2), f_map()));
    let coeffs = |o: &jmate::realizer::RealizationOutcome| -> Vec<(usize, Vec<u64>)> {
        o.solutions
            .iter()
            .map(|s| (s.seed_index, s.map.num.iter().chain(&s.map.den).flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect()))
            .collect()
    };
    assert_eq!(coeffs(&a), coeffs(&b));
}

#[test]
fn family_for_merged_squares_is_rigid() {
    let s = spec(RationalMap::power(2), RationalMap::power(2));
    let setup = prepare(&s).unwrap();
    let fam = build_family(&setup.merged).unwrap();
    assert_eq!(fam.unknown_count(), 0);
    assert!(fam.relations.is_empty());
}
