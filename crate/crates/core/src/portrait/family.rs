use super::{portrait_of, CriticalOrbitPortrait, PERIOD_TOL};
use crate::boettcher::BoettcherChart;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::newton::{newton_refine, newton_solve, NewtonOptions};
use crate::rational::RationalMap;
use crate::sphere::{Point, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Margin for inequations such as `g^2(c) != g(c)`.
pub const INEQUATION_MARGIN: f64 = 1e-6;
/// Two solutions closer than this (max over parameters) are the same.
pub const DEDUP_TOL: f64 = 1e-8;

fn one() -> Vec<String> {
    vec!["1".into()]
}
fn zero() -> String {
    "0".into()
}
fn two() -> usize {
    2
}

/// A parametrized family of maps with prescribed critical-orbit relations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub parameters: Vec<String>,
    /// Numerator coefficient expressions, ascending powers.
    pub numerator: Vec<String>,
    #[serde(default = "one")]
    pub denominator: Vec<String>,
    /// Named points (typically free critical points) as expressions in the
    /// parameters.
    #[serde(default)]
    pub points: BTreeMap<String, String>,
    #[serde(default = "zero")]
    pub marked_center: String,
    #[serde(default = "two")]
    pub d0: usize,
    /// Orbit relations such as `f^2(c) = f(c)` or `g^3(c) = g^2(c) != g(c)`.
    pub relations: Vec<String>,
    #[serde(default)]
    pub seeds: SeedSpec,
}

/// Seeds: an explicit list, or a grid (one parameter) / deterministic random
/// sample (several parameters) in a complex box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedSpec {
    #[serde(default = "default_box")]
    pub re: [f64; 2],
    #[serde(default = "default_box")]
    pub im: [f64; 2],
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub explicit: Vec<Vec<[f64; 2]>>,
}

fn default_box() -> [f64; 2] {
    [-3.0, 3.0]
}
fn default_n() -> usize {
    41
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec { re: default_box(), im: default_box(), n: default_n(), explicit: Vec::new() }
    }
}

/// One side of a relation.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    /// `map^k(point)`.
    Orbit { k: usize, point: String },
    Value(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub text: String,
    pub terms: Vec<Term>,
    /// `true` for `=`, `false` for `!=`, between consecutive terms.
    pub equal: Vec<bool>,
}

impl Relation {
    pub fn parse(text: &str, points: &[String]) -> Result<Relation> {
        let bytes = text.as_bytes();
        let mut pieces = Vec::new();
        let mut equal = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'!' && bytes.get(i + 1) == Some(&b'=') {
                pieces.push((start, &text[start..i]));
                equal.push(false);
                i += 2;
                start = i;
            } else if bytes[i] == b'=' {
                pieces.push((start, &text[start..i]));
                equal.push(true);
                i += 1;
                start = i;
            } else {
                i += 1;
            }
        }
        pieces.push((start, &text[start..]));
        if equal.is_empty() {
            return Err(Error::Parse { line: 1, column: 1, message: "relation needs `=` or `!=`".into() });
        }
        let terms = pieces
            .into_iter()
            .map(|(off, s)| parse_term(s, points).map_err(|e| shift(e, off)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Relation { text: text.to_string(), terms, equal })
    }
}

fn shift(e: Error, off: usize) -> Error {
    match e {
        Error::Parse { line, column, message } => Error::Parse { line, column: column + off, message },
        other => other,
    }
}

fn parse_term(s: &str, points: &[String]) -> Result<Term> {
    let t = s.trim();
    let lead = s.len() - s.trim_start().len();
    let ident_end = t.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(t.len());
    let (name, rest) = t.split_at(ident_end);
    if !name.is_empty() && name.starts_with(|c: char| c.is_ascii_alphabetic()) {
        if rest.is_empty() && points.iter().any(|p| p == name) {
            return Ok(Term::Orbit { k: 0, point: name.to_string() });
        }
        let (k, rest) = if let Some(r) = rest.strip_prefix('^') {
            let digits = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
            match r[..digits].parse::<usize>() {
                Ok(k) => (Some(k), &r[digits..]),
                Err(_) => (None, rest),
            }
        } else {
            (Some(1), rest)
        };
        if let (Some(k), Some(inner)) = (k, rest.strip_prefix('(').and_then(|r| r.strip_suffix(')'))) {
            let inner = inner.trim();
            if points.iter().any(|p| p == inner) {
                return Ok(Term::Orbit { k, point: inner.to_string() });
            }
            if !inner.contains(['(', ')', '+', '-', '*', '/', '^']) {
                return Err(Error::Parse {
                    line: 1,
                    column: lead + 1,
                    message: format!("unknown point `{inner}`"),
                });
            }
        }
    }
    Expr::parse(t).map(Term::Value).map_err(|e| shift(e, lead))
}

#[derive(Clone, Copy)]
struct Vars<'a> {
    names: &'a [String],
    values: &'a [C64],
}

/// A family with all expressions parsed and the equation/inequation lists
/// expanded.
#[derive(Clone, Debug)]
pub struct CompiledFamily {
    pub spec: FamilySpec,
    num: Vec<Expr>,
    den: Vec<Expr>,
    points: Vec<(String, Expr)>,
    center: Expr,
    pub equations: Vec<(Term, Term)>,
    /// Inequations, explicit and implied by minimality of the relations.
    pub inequations: Vec<(Term, Term)>,
}

impl CompiledFamily {
    pub fn new(spec: &FamilySpec) -> Result<Self> {
        let parse_all = |v: &[String]| v.iter().map(|s| Expr::parse(s)).collect::<Result<Vec<_>>>();
        let num = parse_all(&spec.numerator)?;
        let den = parse_all(&spec.denominator)?;
        let points = spec
            .points
            .iter()
            .map(|(k, v)| Ok((k.clone(), Expr::parse(v)?)))
            .collect::<Result<Vec<_>>>()?;
        let center = Expr::parse(&spec.marked_center)?;
        let mut used = Vec::new();
        for e in num.iter().chain(&den).chain(points.iter().map(|(_, e)| e)).chain([&center]) {
            e.variables(&mut used);
        }
        if let Some(v) = used.iter().find(|v| !spec.parameters.contains(v)) {
            return Err(Error::Invalid(format!("expression uses unknown parameter `{v}`")));
        }
        let names: Vec<String> = points.iter().map(|(k, _)| k.clone()).collect();
        let mut equations = Vec::new();
        let mut inequations = Vec::new();
        for text in &spec.relations {
            let rel = Relation::parse(text, &names)?;
            for (w, eq) in rel.equal.iter().enumerate() {
                let pair = (rel.terms[w].clone(), rel.terms[w + 1].clone());
                if *eq {
                    equations.push(pair);
                } else {
                    inequations.push(pair);
                }
            }
        }
        if equations.len() != spec.parameters.len() {
            return Err(Error::Invalid(format!(
                "{} parameters but {} equations; the system must be square",
                spec.parameters.len(),
                equations.len()
            )));
        }
        // minimality: F^m(x) = F^n(x) with m > n means the orbit of x has
        // exactly preperiod n and period m - n, and never meets the centre
        let implied: Vec<(Term, Term)> = equations
            .iter()
            .filter_map(|(a, b)| match (a, b) {
                (Term::Orbit { k: ka, point: pa }, Term::Orbit { k: kb, point: pb }) if pa == pb && ka != kb => {
                    Some((pa.clone(), (*ka).max(*kb), (*ka).min(*kb)))
                }
                _ => None,
            })
            .flat_map(|(p, m, n)| {
                let mut out = Vec::new();
                for j in 0..=m {
                    for i in 0..j {
                        let forced = i >= n && (j - i) % (m - n) == 0;
                        if !forced {
                            out.push((Term::Orbit { k: j, point: p.clone() }, Term::Orbit { k: i, point: p.clone() }));
                        }
                    }
                    out.push((Term::Orbit { k: j, point: p.clone() }, Term::Value(center.clone())));
                }
                out
            })
            .collect();
        for pair in implied {
            if !inequations.contains(&pair) {
                inequations.push(pair);
            }
        }
        Ok(CompiledFamily { spec: spec.clone(), num, den, points, center, equations, inequations })
    }

    pub fn arity(&self) -> usize {
        self.spec.parameters.len()
    }

    fn vars<'a>(&'a self, params: &'a [C64]) -> Vars<'a> {
        Vars { names: &self.spec.parameters, values: params }
    }

    fn coeffs(&self, params: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
        let vars = self.vars(params);
        let ev = |v: &[Expr]| v.iter().map(|e| e.eval_slices(vars.names, vars.values)).collect::<Result<Vec<_>>>();
        Ok((ev(&self.num)?, ev(&self.den)?))
    }

    /// The validated family member at `params`.
    pub fn map_at(&self, params: &[C64]) -> Result<RationalMap> {
        let (n, d) = self.coeffs(params)?;
        RationalMap::new(n, d)
    }

    pub fn point_at(&self, name: &str, params: &[C64]) -> Result<C64> {
        let vars = self.vars(params);
        self.points
            .iter()
            .find(|(k, _)| k == name)
            .ok_or_else(|| Error::Invalid(format!("unknown point `{name}`")))?
            .1
            .eval_slices(vars.names, vars.values)
    }

    pub fn center_at(&self, params: &[C64]) -> Result<C64> {
        self.center.eval_slices(&self.spec.parameters, params)
    }

    fn term_value(&self, t: &Term, map: &RationalMap, vars: &Vars<'_>) -> Result<Point> {
        Ok(match t {
            Term::Value(e) => Point::from(e.eval_slices(vars.names, vars.values)?),
            Term::Orbit { k, point } => {
                let (_, e) = self.points.iter().find(|(n, _)| n == point).unwrap();
                map.iterate(Point::from(e.eval_slices(vars.names, vars.values)?), *k)
            }
        })
    }

    /// `(A − B) / max(1, |A|, |B|)`: the difference measured at the
    /// floating-point scale of its terms.
    fn difference(&self, pair: &(Term, Term), map: &RationalMap, vars: &Vars<'_>) -> Result<C64> {
        let a = self.term_value(&pair.0, map, vars)?;
        let b = self.term_value(&pair.1, map, vars)?;
        Ok(match (a, b) {
            (Point::Finite(x), Point::Finite(y)) => (x - y) / x.norm().max(y.norm()).max(1.0),
            _ => a.chart_difference(&b),
        })
    }

    /// Equation residuals at `params`.
    pub fn residuals(&self, params: &[C64]) -> Result<Vec<C64>> {
        let (n, d) = self.coeffs(params)?;
        let map = RationalMap::unchecked(n, d);
        let vars = self.vars(params);
        self.equations.iter().map(|p| self.difference(p, &map, &vars)).collect()
    }

    /// Smallest inequation gap and the offending inequation.
    pub fn inequation_gap(&self, params: &[C64]) -> Result<Option<(f64, usize)>> {
        let (n, d) = self.coeffs(params)?;
        let map = RationalMap::unchecked(n, d);
        let vars = self.vars(params);
        let mut worst: Option<(f64, usize)> = None;
        for (i, p) in self.inequations.iter().enumerate() {
            let g = self.difference(p, &map, &vars)?.norm();
            if worst.is_none_or(|(w, _)| g < w) {
                worst = Some((g, i));
            }
        }
        Ok(worst)
    }

    /// Residuals divided by the product of the inequation gaps (classical
    /// deflation), so that Newton is repelled from degenerate limits (a named
    /// point running into the centre, collapsing orbits) where the raw
    /// residual also tends to zero.
    fn deflated_residual(&self, x: &[f64]) -> Vec<f64> {
        let params: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        let eval = || -> Result<Vec<f64>> {
            let (n, d) = self.coeffs(&params)?;
            let map = RationalMap::unchecked(n, d);
            let vars = self.vars(&params);
            let mut log_gap = 0.0;
            for p in &self.inequations {
                log_gap += self.difference(p, &map, &vars)?.norm().ln();
            }
            let scale = log_gap.exp();
            Ok(self
                .equations
                .iter()
                .map(|p| self.difference(p, &map, &vars).map(|z| z / scale))
                .collect::<Result<Vec<_>>>()?
                .iter()
                .flat_map(|z| [z.re, z.im])
                .collect())
        };
        eval().unwrap_or_else(|_| vec![f64::NAN; x.len()])
    }

    fn raw_residual(&self, x: &[f64]) -> Vec<f64> {
        let params: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        match self.residuals(&params) {
            Ok(r) => r.iter().flat_map(|z| [z.re, z.im]).collect(),
            Err(_) => vec![f64::NAN; x.len()],
        }
    }

    /// Largest raw equation residual.
    pub fn max_residual(&self, params: &[C64]) -> Result<f64> {
        Ok(self.residuals(params)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Seeds from the spec: explicit, a grid for one parameter, or a
    /// deterministic random sample for several.
    pub fn default_seeds(&self, rng_seed: u64) -> Vec<Vec<C64>> {
        let s = &self.spec.seeds;
        if !s.explicit.is_empty() {
            return s.explicit.iter().map(|v| v.iter().map(|p| C64::new(p[0], p[1])).collect()).collect();
        }
        let lerp = |r: [f64; 2], t: f64| r[0] + (r[1] - r[0]) * t;
        if self.arity() == 1 {
            let n = s.n.max(2);
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    // endpoints included, so a symmetric odd grid contains
                    // the real axis (real seeds stay real under Newton)
                    let tr = i as f64 / (n - 1) as f64;
                    let ti = j as f64 / (n - 1) as f64;
                    out.push(vec![C64::new(lerp(s.re, tr), lerp(s.im, ti))]);
                }
            }
            out
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            (0..s.n * s.n)
                .map(|_| {
                    (0..self.arity())
                        .map(|_| C64::new(lerp(s.re, rng.gen()), lerp(s.im, rng.gen())))
                        .collect()
                })
                .collect()
        }
    }
}

/// One solution of a family.
#[derive(Clone, Debug, Serialize)]
pub struct FamilySolution {
    pub seed_index: usize,
    pub params: Vec<C64>,
    pub map: RationalMap,
    pub residual: f64,
    pub inequation_gap: f64,
    pub portrait: CriticalOrbitPortrait,
    /// Per named point: whether its orbit is captured by the marked centre.
    pub attracted: BTreeMap<String, bool>,
    /// Per named point: landing angle on the marked basin boundary, if any.
    pub boundary_angles: BTreeMap<String, Option<(u64, u64)>>,
}

/// Outcome of [`solve_family`]: accepted solutions in seed order plus notes
/// on converged candidates that were filtered out.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyOutcome {
    pub solutions: Vec<FamilySolution>,
    pub notes: Vec<String>,
    pub best_residual: f64,
}

enum Attempt {
    Diverged(f64),
    Filtered(String),
    Accepted(Vec<C64>, f64, f64),
}

/// Newton from every seed (in parallel, merged in seed order), followed by
/// inequation filtering, deduplication and portrait extraction.
pub fn solve_family(spec: &FamilySpec, seeds: &[Vec<C64>], tol: f64) -> Result<FamilyOutcome> {
    let fam = CompiledFamily::new(spec)?;
    let opts = NewtonOptions { tol, max_iter: 100, ..Default::default() };
    let judge = |x: &[f64]| -> Attempt {
        let params: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        let residual = match fam.max_residual(&params) {
            Ok(r) if r.is_finite() => r,
            _ => return Attempt::Diverged(f64::INFINITY),
        };
        if let Err(e) = fam.map_at(&params) {
            return Attempt::Filtered(format!("{params:?}: degenerate map ({e})"));
        }
        // a named point escaping to ∞ (e.g. c = −2/(3a) at a = 0) satisfies
        // orbit relations trivially at a degenerate family member
        for (name, _) in &fam.points {
            match fam.point_at(name, &params) {
                Ok(z) if z.re.is_finite() && z.im.is_finite() => {}
                _ => return Attempt::Filtered(format!("{params:?}: point {name} is not finite")),
            }
        }
        match fam.inequation_gap(&params) {
            Ok(Some((gap, i))) if gap <= INEQUATION_MARGIN => {
                let (a, b) = &fam.inequations[i];
                Attempt::Filtered(format!("{params:?}: violates {} != {} (gap {gap:.1e})", show(a), show(b)))
            }
            Ok(_) if residual >= tol => Attempt::Diverged(residual),
            Ok(gap) => Attempt::Accepted(params, residual, gap.map_or(f64::INFINITY, |g| g.0)),
            Err(e) => Attempt::Filtered(format!("{params:?}: {e}")),
        }
    };
    // Each seed runs twice: on the deflated system, which keeps Newton away
    // from degenerate limits, and on the raw system, whose basins are not
    // distorted by the deflation poles. Candidates are judged identically.
    let attempts: Vec<Attempt> = seeds
        .par_iter()
        .flat_map_iter(|seed| {
            let x0: Vec<f64> = seed.iter().flat_map(|z| [z.re, z.im]).collect();
            let deflated = |x: &[f64]| fam.deflated_residual(x);
            let first = judge(&newton_refine(deflated, &x0, opts.max_iter, opts.fd_step).x);
            let raw = |x: &[f64]| fam.raw_residual(x);
            let second = match newton_solve(raw, &x0, &opts) {
                Ok(sol) => judge(&newton_refine(raw, &sol.x, 60, opts.fd_step).x),
                Err(Error::NonConvergence { best_residual, .. }) | Err(Error::SingularJacobian { residual: best_residual }) => {
                    Attempt::Diverged(best_residual)
                }
                Err(_) => Attempt::Diverged(f64::INFINITY),
            };
            [first, second]
        })
        .collect();

    let mut best_residual = f64::INFINITY;
    let mut notes = Vec::new();
    let mut accepted: Vec<(usize, Vec<C64>, f64, f64)> = Vec::new();
    for (idx, a) in attempts.into_iter().enumerate().map(|(i, a)| (i / 2, a)) {
        match a {
            Attempt::Diverged(r) => best_residual = best_residual.min(r),
            Attempt::Filtered(note) => {
                if !notes.contains(&note) && notes.len() < 64 {
                    notes.push(note)
                }
            }
            Attempt::Accepted(p, r, gap) => {
                best_residual = best_residual.min(r);
                let dup = accepted.iter().any(|(_, q, _, _)| {
                    q.iter().zip(&p).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) < DEDUP_TOL
                });
                if !dup {
                    accepted.push((idx, p, r, gap));
                }
            }
        }
    }
    if accepted.is_empty() && notes.is_empty() {
        return Err(Error::NonConvergence { iterations: opts.max_iter, best_residual });
    }

    let mut solutions = Vec::new();
    for (seed_index, params, residual, gap) in accepted {
        let map = fam.map_at(&params)?;
        let center = fam.center_at(&params)?;
        let mut portrait = portrait_of(&map, 64, PERIOD_TOL)?;
        let marked = portrait.mark_basin(Point::Finite(center), spec.d0, PERIOD_TOL)?;
        let chart = BoettcherChart::new(&map, center, spec.d0).ok();
        let mut attracted = BTreeMap::new();
        let mut boundary_angles = BTreeMap::new();
        for (name, _) in &fam.points {
            let z = fam.point_at(name, &params)?;
            let node = portrait
                .nodes
                .iter()
                .position(|n| n.point.is_some_and(|p| p.chordal(&Point::Finite(z)) < PERIOD_TOL));
            let (inside, angle) = match (&chart, node) {
                (Some(ch), Some(i)) => {
                    let (pre, per) = portrait.orbit_shape(i);
                    let inside = i == marked || portrait.nodes_in_basin().contains(&i);
                    (inside, if inside { None } else { ch.boundary_angle(z, pre, per) })
                }
                (Some(ch), None) => (ch.in_basin(Point::Finite(z)), None),
                _ => (false, None),
            };
            attracted.insert(name.clone(), inside);
            boundary_angles.insert(name.clone(), angle);
        }
        if let Some(ch) = &chart {
            portrait.annotate_boundary(ch);
        }
        solutions.push(FamilySolution {
            seed_index,
            params,
            map,
            residual,
            inequation_gap: gap,
            portrait,
            attracted,
            boundary_angles,
        });
    }
    Ok(FamilyOutcome { solutions, notes, best_residual })
}

fn show(t: &Term) -> String {
    match t {
        Term::Orbit { k: 0, point } => point.clone(),
        Term::Orbit { k: 1, point } => format!("F({point})"),
        Term::Orbit { k, point } => format!("F^{k}({point})"),
        Term::Value(e) => format!("{e:?}"),
    }
}
