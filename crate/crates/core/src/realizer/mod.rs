//! Realization of a mating as a rational map: normal form from the merged
//! portrait, Newton on the orbit relations, post-hoc filters, verification
//! and selection of the mating among the portrait realizations.

mod interface;

pub use interface::{check_interface, pull_back_interface, Interface, InterfaceAnchor, InterfaceCheck};

use crate::boettcher::BoettcherChart;
use crate::error::{Error, Result};
use crate::newton::{newton_refine, newton_solve, NewtonOptions};
use crate::poly::{roots, Poly};
use crate::portrait::{
    merge_portraits_with_index, portrait_of, CriticalOrbitPortrait, Side, DEDUP_TOL, INEQUATION_MARGIN, PERIOD_TOL,
};
use crate::rational::{RationalMap, MAX_DEGREE};
use crate::render::{attracting_cycles, classify_point, Label};
use crate::sphere::{Point, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Default relation tolerance during Newton.
pub const NEWTON_TOL: f64 = 1e-12;
/// Default relation tolerance for accepting a realization.
pub const ACCEPT_TOL: f64 = 1e-10;

/// Two post-critically finite maps with marked superattracting fixed points
/// of local degree `d0`, glued with index `k`.
#[derive(Clone, Debug)]
pub struct MatingSpec {
    pub f: RationalMap,
    pub g: RationalMap,
    pub f_center: C64,
    pub g_center: C64,
    pub d0: usize,
    pub k: usize,
}

/// Where a merged-portrait node sits in the realized map's plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NodeSource {
    Zero,
    Infinity,
    /// `R^steps(c_free)`.
    Orbit { free: usize, steps: usize },
}

/// `R^steps(c_free) = target`.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitRelation {
    pub free: usize,
    pub steps: usize,
    pub target: NodeSource,
    pub text: String,
}

/// Normal form `R(z) = z^{m0} N(z) / Dn(z)` with `N` monic of degree
/// `a = D − m0` and `deg Dn = b = D − m∞`: the `g`-anchor sits at 0, the
/// `f`-anchor at ∞, and the first free critical point is pinned to 1.
///
/// Unknowns: the `a` lower coefficients of `N`, the `b + 1` coefficients of
/// `Dn`, and the free critical points after the first. Equations: each free
/// critical point is a root of the reduced derivative numerator, plus one
/// orbit relation per free critical point.
#[derive(Clone, Debug, Serialize)]
pub struct RealizerFamily {
    pub degree: usize,
    pub m0: usize,
    pub m_inf: usize,
    pub a: usize,
    pub b: usize,
    /// Merged-node index of each free critical point.
    pub free: Vec<usize>,
    pub relations: Vec<OrbitRelation>,
    /// Location rule for every merged node.
    pub sources: Vec<NodeSource>,
    pub labels: Vec<String>,
}

impl RealizerFamily {
    pub fn unknown_count(&self) -> usize {
        if self.a + self.b == 0 {
            0
        } else {
            2 * (self.a + self.b)
        }
    }

    pub fn unknown_names(&self) -> Vec<String> {
        if self.unknown_count() == 0 {
            return Vec::new();
        }
        let mut v: Vec<String> = (0..self.a).map(|i| format!("n{i}")).collect();
        v.extend((0..=self.b).map(|i| format!("d{i}")));
        v.extend(self.free.iter().skip(1).map(|&i| format!("crit[{}]", self.labels[i])));
        v
    }

    pub fn normalization(&self) -> String {
        let first = self.free.first().map(|&i| format!("; critical point {} pinned to 1", self.labels[i]));
        format!(
            "R(z) = z^{} N(z)/Dn(z), deg N = {} (monic), deg Dn = {}; local degree {} at 0, {} at inf{}",
            self.m0,
            self.a,
            self.b,
            self.m0,
            self.m_inf,
            first.unwrap_or_else(|| "; Dn = 1".into())
        )
    }

    /// Map and free critical points encoded by `u`.
    pub fn decode(&self, u: &[C64]) -> (RationalMap, Vec<C64>) {
        if self.unknown_count() == 0 {
            return (RationalMap::power(self.degree), Vec::new());
        }
        let mut num = vec![ZERO; self.m0];
        num.extend_from_slice(&u[..self.a]);
        num.push(ONE);
        let den = u[self.a..self.a + self.b + 1].to_vec();
        let mut crit = vec![ONE];
        crit.extend_from_slice(&u[self.a + self.b + 1..]);
        (RationalMap::unchecked(num, den), crit)
    }

    /// Reduced derivative numerator `(m0 N + z N') Dn − z N Dn'`, whose
    /// roots are exactly the free critical points.
    fn reduced_critical_poly(&self, map: &RationalMap) -> Poly {
        let n = Poly(map.num[self.m0.min(map.num.len())..].to_vec());
        let d = map.den_poly();
        let lhs = n.scale(C64::new(self.m0 as f64, 0.0)).add(&n.derivative().shift_up(1)).mul(&d);
        lhs.sub(&n.shift_up(1).mul(&d.derivative()))
    }

    fn locate(&self, map: &RationalMap, crit: &[C64], s: NodeSource) -> Point {
        match s {
            NodeSource::Zero => Point::Finite(ZERO),
            NodeSource::Infinity => Point::Infinity,
            NodeSource::Orbit { free, steps } => map.iterate(Point::Finite(crit[free]), steps),
        }
    }

    /// Positions of all merged nodes.
    pub fn node_positions(&self, map: &RationalMap, crit: &[C64]) -> Vec<Point> {
        self.sources.iter().map(|&s| self.locate(map, crit, s)).collect()
    }

    /// Scaled complex residuals: critical-point equations, then relations.
    pub fn residuals(&self, u: &[C64]) -> Vec<C64> {
        let (map, crit) = self.decode(u);
        let q = self.reduced_critical_poly(&map);
        let mut out: Vec<C64> = crit
            .iter()
            .map(|&c| {
                let scale: f64 = q.0.iter().rev().fold(0.0, |acc, k| acc * c.norm() + k.norm());
                q.eval(c) / scale.max(f64::MIN_POSITIVE)
            })
            .collect();
        out.extend(self.relation_residuals(&map, &crit));
        out
    }

    /// `(A − B)/max(1, |A|, |B|)` per relation, chart difference at ∞.
    pub fn relation_residuals(&self, map: &RationalMap, crit: &[C64]) -> Vec<C64> {
        self.relations
            .iter()
            .map(|r| {
                let a = map.iterate(Point::Finite(crit[r.free]), r.steps);
                let b = self.locate(map, crit, r.target);
                match (a, b) {
                    (Point::Finite(x), Point::Finite(y)) => (x - y) / x.norm().max(y.norm()).max(1.0),
                    _ => a.chart_difference(&b),
                }
            })
            .collect()
    }

    fn real_residual(&self, x: &[f64]) -> Vec<f64> {
        let u: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        self.residuals(&u).into_iter().flat_map(|z| [z.re, z.im]).collect()
    }

    /// Seeds from random maps of the normal form: each random map's free
    /// critical points, under every assignment to the free nodes, rescaled
    /// so the first lands on 1.
    pub fn default_seeds(&self, rng_seed: u64, n_maps: usize) -> Vec<Vec<C64>> {
        let m = self.a + self.b;
        if m == 0 {
            return vec![Vec::new()];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let perms = permutations(m);
        let mut seeds = Vec::new();
        let mut tries = 0;
        while seeds.len() < n_maps * perms.len() && tries < 20 * n_maps {
            tries += 1;
            let sample = |rng: &mut ChaCha8Rng| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let mut num = vec![ZERO; self.m0];
            num.extend((0..self.a).map(|_| sample(&mut rng)));
            num.push(ONE);
            let den: Vec<C64> = (0..=self.b).map(|_| sample(&mut rng)).collect();
            let map = RationalMap::unchecked(num, den.clone());
            let Ok(cs) = roots(&self.reduced_critical_poly(&map)) else { continue };
            if cs.len() != m || cs.iter().any(|c| c.norm() < 1e-3) {
                continue;
            }
            for p in &perms {
                let lambda = cs[p[0]];
                let mut u: Vec<C64> = (0..self.a).map(|i| map.num[self.m0 + i] * lambda.powi((i as i32) - self.a as i32)).collect();
                let s = lambda.powi((self.m0 + self.a) as i32 - 1);
                u.extend(den.iter().enumerate().map(|(i, d)| d * lambda.powi(i as i32) / s));
                u.extend(p[1..].iter().map(|&j| cs[j] / lambda));
                seeds.push(u);
            }
        }
        seeds
    }
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Normal form and orbit relations for a merged portrait.
pub fn build_family(merged: &CriticalOrbitPortrait) -> Result<RealizerFamily> {
    let (fa, ga) = merged
        .anchors
        .ok_or_else(|| Error::Unsupported("merged portrait has no pair of fixed critical anchors".into()))?;
    let degree = merged.implied_degree();
    if degree > MAX_DEGREE {
        return Err(Error::Unsupported(format!("degree {degree} exceeds {MAX_DEGREE}")));
    }
    let m0 = merged.nodes[ga].local_degree;
    let m_inf = merged.nodes[fa].local_degree;
    if merged.edges[fa] != fa || merged.edges[ga] != ga || m0 > degree || m_inf > degree {
        return Err(Error::Unsupported(format!("anchors {fa}, {ga} are not fixed critical nodes of degree ≤ {degree}")));
    }
    let free: Vec<usize> = (0..merged.nodes.len())
        .filter(|&i| i != fa && i != ga && merged.is_critical(i))
        .collect();
    let shape = || {
        merged
            .nodes
            .iter()
            .map(|n| format!("{}(deg {})", n.label, n.local_degree))
            .collect::<Vec<_>>()
            .join(", ")
    };
    if let Some(&i) = free.iter().find(|&&i| merged.nodes[i].local_degree != 2) {
        return Err(Error::Unsupported(format!(
            "free critical node {} has local degree {}; only simple free critical points are supported [{}]",
            merged.nodes[i].label,
            merged.nodes[i].local_degree,
            shape()
        )));
    }
    let (a, b) = (degree - m0, degree - m_inf);
    if free.len() != a + b {
        return Err(Error::Unsupported(format!(
            "{} free critical nodes but the normal form has {} [{}]",
            free.len(),
            a + b,
            shape()
        )));
    }

    let n = merged.nodes.len();
    let mut sources: Vec<Option<NodeSource>> = vec![None; n];
    sources[ga] = Some(NodeSource::Zero);
    sources[fa] = Some(NodeSource::Infinity);
    let labels: Vec<String> = merged.nodes.iter().map(|n| n.label.clone()).collect();
    let show = |s: NodeSource| match s {
        NodeSource::Zero => "0".to_string(),
        NodeSource::Infinity => "inf".to_string(),
        NodeSource::Orbit { free: l, steps } => iterate_text(&format!("c{}", l + 1), steps),
    };
    let mut relations = Vec::new();
    for (fi, &start) in free.iter().enumerate() {
        sources[start].get_or_insert(NodeSource::Orbit { free: fi, steps: 0 });
        let mut cur = start;
        let mut steps = 0;
        loop {
            cur = merged.edges[cur];
            steps += 1;
            let target = if let Some(l) = free.iter().position(|&j| j == cur).filter(|&l| l != fi) {
                Some(NodeSource::Orbit { free: l, steps: 0 })
            } else {
                sources[cur]
            };
            if let Some(t) = target {
                let text = format!("{} = {}", iterate_text(&format!("c{}", fi + 1), steps), show(t));
                relations.push(OrbitRelation { free: fi, steps, target: t, text });
                break;
            }
            sources[cur] = Some(NodeSource::Orbit { free: fi, steps });
        }
    }
    let sources: Vec<NodeSource> = sources
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| Error::Unsupported(format!("node {} is not on a critical orbit", labels[i]))))
        .collect::<Result<_>>()?;
    Ok(RealizerFamily { degree, m0, m_inf, a, b, free, relations, sources, labels })
}

fn iterate_text(x: &str, k: usize) -> String {
    match k {
        0 => x.to_string(),
        1 => format!("R({x})"),
        k => format!("R^{k}({x})"),
    }
}

/// Everything derived from a [`MatingSpec`] before solving.
#[derive(Clone, Debug, Serialize)]
pub struct MatingSetup {
    pub pf: CriticalOrbitPortrait,
    pub pg: CriticalOrbitPortrait,
    pub merged: CriticalOrbitPortrait,
    pub family: RealizerFamily,
    pub d0: usize,
    pub k: usize,
    /// `(deg f, deg g)`.
    pub degrees: (usize, usize),
    /// Circle-model angle of each merged node on the interface.
    pub model_angles: Vec<Option<(u64, u64)>>,
    /// Local degrees `(e_f, e_g)` contributed by each side to every merged
    /// node (1 for a side without members).
    pub side_degrees: Vec<(usize, usize)>,
}

fn marked_portrait(map: &RationalMap, center: C64, d0: usize) -> Result<CriticalOrbitPortrait> {
    let mut p = portrait_of(map, 64, PERIOD_TOL)?;
    p.mark_basin(Point::Finite(center), d0, PERIOD_TOL)?;
    let chart = BoettcherChart::new(map, center, d0)?;
    if let Some(&i) = p.nodes_in_basin().first() {
        return Err(Error::Invalid(format!("critical orbit node {} lies in the marked basin", p.nodes[i].label)));
    }
    p.annotate_boundary(&chart);
    Ok(p)
}

/// Portraits, merge, normal form and interface angles for a mating.
pub fn prepare(spec: &MatingSpec) -> Result<MatingSetup> {
    let pf = marked_portrait(&spec.f, spec.f_center, spec.d0)?;
    let pg = marked_portrait(&spec.g, spec.g_center, spec.d0)?;
    let merged = merge_portraits_with_index(&pf, &pg, spec.d0, spec.k)?;
    let family = build_family(&merged)?;
    let m = (spec.d0 - 1) as u64;
    let model_angles = merged
        .nodes
        .iter()
        .map(|n| {
            let angle = |side: Side| {
                n.members.iter().filter(|(s, _)| *s == side).find_map(|(_, l)| {
                    let p = if side == Side::F { &pf } else { &pg };
                    p.find(l).and_then(|j| p.nodes[j].boundary_angle)
                })
            };
            angle(Side::F).or_else(|| {
                angle(Side::G).map(|(a, b)| {
                    // partner angle k/(d0−1) − θ_g
                    let num = (spec.k as u64 * b + m * (b * m) - a * m) % (b * m);
                    crate::portrait::reduce(num, b * m)
                })
            })
        })
        .collect();
    let side_degrees = merged
        .nodes
        .iter()
        .map(|n| {
            let deg = |side: Side| {
                let p = if side == Side::F { &pf } else { &pg };
                1 + n
                    .members
                    .iter()
                    .filter(|(s, _)| *s == side)
                    .filter_map(|(_, l)| p.find(l).map(|j| p.nodes[j].local_degree - 1))
                    .sum::<usize>()
            };
            (deg(Side::F), deg(Side::G))
        })
        .collect();
    Ok(MatingSetup {
        side_degrees,
        degrees: (pf.implied_degree(), pg.implied_degree()),
        pf,
        pg,
        merged,
        family,
        d0: spec.d0,
        k: spec.k,
        model_angles,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizedMating {
    pub seed_index: usize,
    pub map: RationalMap,
    pub unknowns: Vec<(String, C64)>,
    /// Per-relation residuals `(relation, |residual|)`.
    pub residuals: Vec<(String, f64)>,
    /// Largest residual of the full system (critical equations included).
    pub max_residual: f64,
    pub normalization: String,
    /// Merged-node label → label of the matching node of `portrait_of(R)`.
    pub portrait_match: Vec<(String, String)>,
    pub node_positions: Vec<Point>,
    pub free_critical_points: Vec<C64>,
    pub interface: Option<InterfaceCheck>,
}

impl RealizedMating {
    pub fn is_mating(&self) -> bool {
        self.interface.as_ref().is_some_and(|i| i.jordan_interface)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationOutcome {
    pub setup: MatingSetup,
    pub solutions: Vec<RealizedMating>,
    pub notes: Vec<String>,
    pub best_residual: f64,
}

impl RealizationOutcome {
    /// The first solution (in seed order) passing the interface test.
    pub fn mating(&self) -> Option<&RealizedMating> {
        self.solutions.iter().find(|s| s.is_mating())
    }
}

/// Options for [`realize`].
#[derive(Clone, Copy, Debug)]
pub struct RealizeOptions {
    pub tol: f64,
    /// Samples and pullback steps of the interface test; 0 samples skips it.
    pub interface_samples: usize,
    pub interface_iterations: usize,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        RealizeOptions { tol: ACCEPT_TOL, interface_samples: 512, interface_iterations: 150 }
    }
}

enum Attempt {
    Diverged(f64),
    Filtered(String),
    Accepted(Vec<C64>, f64),
}

/// Solves for every map of the normal form realizing the merged portrait.
///
/// Seeds are solved in parallel; survivors must have residual below
/// `opts.tol`, exact degree, no common numerator/denominator roots,
/// pairwise distinct portrait nodes and a portrait isomorphic to the merged
/// one. Duplicates are dropped; output is in seed order.
pub fn realize(spec: &MatingSpec, seeds: &[Vec<C64>], opts: &RealizeOptions) -> Result<RealizationOutcome> {
    let setup = prepare(spec)?;
    let fam = &setup.family;
    let nopts = NewtonOptions { tol: NEWTON_TOL, max_iter: 100, ..Default::default() };
    let judge = |x: &[f64]| -> Attempt {
        let u: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        let res = fam.residuals(&u).iter().map(|r| r.norm()).fold(0.0, f64::max);
        if !res.is_finite() || res >= opts.tol {
            return Attempt::Diverged(if res.is_finite() { res } else { f64::INFINITY });
        }
        match admissible(fam, &setup.merged, &u) {
            Ok(()) => Attempt::Accepted(u, res),
            Err(note) => Attempt::Filtered(note),
        }
    };
    let attempts: Vec<Attempt> = if fam.unknown_count() == 0 {
        vec![judge(&[])]
    } else {
        seeds
            .par_iter()
            .map(|seed| {
                let x0: Vec<f64> = seed.iter().flat_map(|z| [z.re, z.im]).collect();
                let f = |x: &[f64]| fam.real_residual(x);
                match newton_solve(f, &x0, &nopts) {
                    Ok(sol) => judge(&newton_refine(f, &sol.x, 20, nopts.fd_step).x),
                    Err(Error::NonConvergence { best_residual, .. }) => Attempt::Diverged(best_residual),
                    Err(Error::SingularJacobian { residual }) => Attempt::Diverged(residual),
                    Err(_) => Attempt::Diverged(f64::INFINITY),
                }
            })
            .collect()
    };

    let mut best_residual = f64::INFINITY;
    let mut notes = Vec::new();
    let mut accepted: Vec<(usize, Vec<C64>, f64)> = Vec::new();
    for (idx, a) in attempts.into_iter().enumerate() {
        match a {
            Attempt::Diverged(r) => best_residual = best_residual.min(r),
            Attempt::Filtered(note) => {
                if !notes.contains(&note) && notes.len() < 64 {
                    notes.push(note)
                }
            }
            Attempt::Accepted(u, r) => {
                best_residual = best_residual.min(r);
                let dup = accepted.iter().any(|(_, v, _)| {
                    v.iter().zip(&u).map(|(x, y)| (x - y).norm() / (1.0 + x.norm())).fold(0.0, f64::max) < DEDUP_TOL
                });
                if !dup {
                    accepted.push((idx, u, r));
                }
            }
        }
    }
    if accepted.is_empty() {
        return Err(Error::NoRealization(format!(
            "{} seeds, best residual {best_residual:.3e}; {} candidates filtered{}",
            seeds.len().max(1),
            notes.len(),
            notes.first().map(|n| format!(" (e.g. {n})")).unwrap_or_default()
        )));
    }

    let names = fam.unknown_names();
    let mut solutions: Vec<RealizedMating> = accepted
        .into_par_iter()
        .map(|(seed_index, u, max_residual)| {
            let (map, crit) = fam.decode(&u);
            let map = RationalMap::new(map.num, map.den).expect("validated by admissible");
            let node_positions = fam.node_positions(&map, &crit);
            let residuals = fam
                .relations
                .iter()
                .zip(fam.relation_residuals(&map, &crit))
                .map(|(r, v)| (r.text.clone(), v.norm()))
                .collect();
            let portrait_match = match_portrait(fam, &setup.merged, &map, &node_positions).unwrap_or_default();
            let interface = (opts.interface_samples > 0).then(|| {
                let anchors = interface_anchors(&setup, &node_positions);
                check_interface(&map, setup.d0, &anchors, setup.degrees, opts.interface_samples, opts.interface_iterations).0
            });
            RealizedMating {
                seed_index,
                unknowns: names.iter().cloned().zip(u.iter().copied()).collect(),
                residuals,
                max_residual,
                normalization: fam.normalization(),
                portrait_match,
                free_critical_points: crit,
                node_positions,
                interface,
                map,
            }
        })
        .collect();
    solutions.sort_by_key(|s| s.seed_index);
    Ok(RealizationOutcome { setup, solutions, notes, best_residual })
}

/// Anchors of the interface curve: merged nodes with a circle-model angle,
/// at their realized positions.
pub fn interface_anchors(setup: &MatingSetup, positions: &[Point]) -> Vec<InterfaceAnchor> {
    (0..positions.len())
        .filter_map(|i| {
            Some(InterfaceAnchor {
                angle: setup.model_angles[i]?,
                point: positions[i].as_finite()?,
                f_degree: setup.side_degrees[i].0,
                g_degree: setup.side_degrees[i].1,
            })
        })
        .collect()
}

/// Post-hoc filters: exact degree, valid map, distinct nodes, portrait
/// fidelity.
fn admissible(fam: &RealizerFamily, merged: &CriticalOrbitPortrait, u: &[C64]) -> std::result::Result<(), String> {
    let (map, crit) = fam.decode(u);
    let tag = || format!("{:?}", u.iter().map(|z| format!("{z:.6}")).collect::<Vec<_>>());
    let den_scale = map.den.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if map.den.len() != fam.b + 1 || map.den[fam.b].norm() <= 1e-8 * den_scale || map.den[0].norm() <= 1e-8 * den_scale {
        return Err(format!("{}: degree drops below {}", tag(), fam.degree));
    }
    let map = RationalMap::new(map.num, map.den).map_err(|e| format!("{}: degenerate map ({e})", tag()))?;
    if map.degree() != fam.degree {
        return Err(format!("{}: degree {} instead of {}", tag(), map.degree(), fam.degree));
    }
    let pos = fam.node_positions(&map, &crit);
    for i in 0..pos.len() {
        for j in 0..i {
            if pos[i].chordal(&pos[j]) <= INEQUATION_MARGIN {
                return Err(format!("{}: nodes {} and {} coincide", tag(), fam.labels[j], fam.labels[i]));
            }
        }
    }
    match_portrait(fam, merged, &map, &pos).map(|_| ()).map_err(|e| format!("{}: {e}", tag()))
}

/// Node correspondence merged portrait → `portrait_of(R)`, checking
/// bijectivity, local degrees and edges.
fn match_portrait(
    fam: &RealizerFamily,
    merged: &CriticalOrbitPortrait,
    map: &RationalMap,
    pos: &[Point],
) -> std::result::Result<Vec<(String, String)>, String> {
    let rp = portrait_of(map, 64, 1e-7).map_err(|e| format!("portrait of R: {e}"))?;
    if rp.nodes.len() != merged.nodes.len() {
        return Err(format!("portrait of R has {} nodes, merged has {}", rp.nodes.len(), merged.nodes.len()));
    }
    let mut m = Vec::with_capacity(pos.len());
    for (i, p) in pos.iter().enumerate() {
        let j = rp
            .nodes
            .iter()
            .position(|n| n.point.is_some_and(|q| q.chordal(p) < 1e-6))
            .ok_or_else(|| format!("node {} has no counterpart", fam.labels[i]))?;
        if rp.nodes[j].local_degree != merged.nodes[i].local_degree {
            return Err(format!(
                "node {}: local degree {} instead of {}",
                fam.labels[i], rp.nodes[j].local_degree, merged.nodes[i].local_degree
            ));
        }
        if m.contains(&j) {
            return Err(format!("node {} matched twice", fam.labels[i]));
        }
        m.push(j);
    }
    for i in 0..pos.len() {
        if rp.edges[m[i]] != m[merged.edges[i]] {
            return Err(format!("edge out of {} not preserved", fam.labels[i]));
        }
    }
    Ok((0..pos.len()).map(|i| (fam.labels[i].clone(), rp.nodes[m[i]].label.clone())).collect())
}

/// Checkable meaning of "R is a rational map of degree D realizing the
/// merged portrait".
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub degree: usize,
    pub expected_degree: usize,
    pub preimage_samples: usize,
    /// Samples whose preimages were not exactly `D` distinct points mapping back.
    pub preimage_failures: usize,
    pub max_preimage_error: f64,
    pub relation_residuals: Vec<(String, f64)>,
    pub max_relation_residual: f64,
    /// `(node, expected local degree, measured local degree)`.
    pub local_degrees: Vec<(String, usize, usize)>,
    pub attracting_cycles: usize,
    pub expected_attracting_cycles: usize,
    /// Distinct basin labels seen on the classification grid.
    pub basins_seen: usize,
    pub passed: bool,
}

/// Verifies a realization: preimage counts on `samples` random sphere
/// points, relation residuals, local degrees by vanishing order of the
/// derivative, and basin classification on a `grid × grid` window.
pub fn verify_realization(
    rm: &RealizedMating,
    fam: &RealizerFamily,
    merged: &CriticalOrbitPortrait,
    tol: f64,
    samples: usize,
    grid: usize,
    rng_seed: u64,
) -> Result<VerificationReport> {
    let map = &rm.map;
    let d = map.degree();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut failures = 0;
    let mut max_err: f64 = 0.0;
    for _ in 0..samples {
        // uniform on the sphere through inverse stereographic projection
        let zc: f64 = rng.gen_range(-1.0..1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let w = Point::Finite(C64::from_polar(((1.0 + zc) / (1.0 - zc)).sqrt(), phi));
        let pre = map.preimages(w)?;
        let mut ok = pre.len() == d;
        for (i, p) in pre.iter().enumerate() {
            let e = map.eval(*p).chordal(&w);
            max_err = max_err.max(e);
            ok &= e < 1e-8 && pre[..i].iter().all(|q| q.chordal(p) > 1e-9);
        }
        if !ok {
            failures += 1;
        }
    }
    let relation_residuals = fam
        .relations
        .iter()
        .zip(fam.relation_residuals(map, &rm.free_critical_points))
        .map(|(r, v)| (r.text.clone(), v.norm()))
        .collect::<Vec<_>>();
    let max_relation_residual = relation_residuals.iter().map(|r| r.1).fold(0.0, f64::max);

    let crit = map.critical_points()?;
    let local_degrees: Vec<(String, usize, usize)> = (0..merged.nodes.len())
        .map(|i| {
            let measured = crit
                .iter()
                .find(|c| c.point.chordal(&rm.node_positions[i]) < 1e-6)
                .map_or(1, |c| c.local_degree);
            (fam.labels[i].clone(), merged.nodes[i].local_degree, measured)
        })
        .collect();

    let cycles = attracting_cycles(map, &portrait_of(map, 64, 1e-7)?);
    let expected_attracting_cycles = (0..merged.nodes.len())
        .filter(|&i| merged.orbit_shape(i).0 == 0 && merged.is_critical(i))
        .map(|i| {
            let mut c = vec![i];
            let mut j = merged.edges[i];
            while j != i {
                c.push(j);
                j = merged.edges[j];
            }
            *c.iter().min().unwrap()
        })
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let basins_seen = if grid > 0 {
        let window = crate::render::Viewport::covering(&rm.node_positions, grid);
        let labels: std::collections::BTreeSet<Option<usize>> = (0..grid * grid)
            .into_par_iter()
            .map(|k| match classify_point(map, Point::Finite(window.pixel_center(k % grid, k / grid)), &cycles, 500) {
                Label::Basin { cycle, .. } => Some(cycle),
                Label::Julia => None,
            })
            .collect();
        labels.iter().filter(|l| l.is_some()).count()
    } else {
        0
    };
    let passed = d == fam.degree
        && failures == 0
        && max_relation_residual < tol
        && local_degrees.iter().all(|(_, a, b)| a == b)
        && cycles.len() == expected_attracting_cycles
        && (grid == 0 || basins_seen == expected_attracting_cycles);
    Ok(VerificationReport {
        degree: d,
        expected_degree: fam.degree,
        preimage_samples: samples,
        preimage_failures: failures,
        max_preimage_error: max_err,
        relation_residuals,
        max_relation_residual,
        local_degrees,
        attracting_cycles: cycles.len(),
        expected_attracting_cycles,
        basins_seen,
        passed,
    })
}

/// Relation residuals of `map` with its free critical points located next to
/// `hint` (for sensitivity checks on perturbed maps).
pub fn relation_residuals_near(fam: &RealizerFamily, map: &RationalMap, hint: &[C64]) -> Result<Vec<f64>> {
    let crit = map.critical_points()?;
    let moved: Vec<C64> = hint
        .iter()
        .map(|h| {
            crit.iter()
                .filter_map(|c| c.point.as_finite())
                .min_by(|a, b| (a - h).norm().total_cmp(&(b - h).norm()))
                .unwrap_or(*h)
        })
        .collect();
    Ok(fam.relation_residuals(map, &moved).iter().map(|r| r.norm()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutations_are_complete_and_sorted() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0, 1, 2]);
        assert_eq!(p[5], vec![2, 1, 0]);
    }
}
