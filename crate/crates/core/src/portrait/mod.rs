//! Critical-orbit portraits: detection, parametrized family solving and the
//! merge that produces the target portrait of a mating.

mod family;

pub use family::{
    solve_family, CompiledFamily, FamilyOutcome, FamilySolution, FamilySpec, Relation, SeedSpec, Term, DEDUP_TOL,
    INEQUATION_MARGIN,
};

use crate::boettcher::{gcd, BoettcherChart};
use crate::error::{Error, Result};
use crate::rational::RationalMap;
use crate::sphere::Point;
use serde::{Deserialize, Serialize};

/// Default periodicity tolerance (chordal metric).
pub const PERIOD_TOL: f64 = 1e-9;

/// Which side of a mating a node came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    F,
    G,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortraitNode {
    pub label: String,
    /// Position in the map's own plane; `None` for merged nodes that stand
    /// for points of two different planes.
    pub point: Option<Point>,
    pub local_degree: usize,
    pub marked: bool,
    /// Angle `num/den` (turns) of the internal ray of the marked basin that
    /// lands at this node, when the node lies on the basin boundary.
    pub boundary_angle: Option<(u64, u64)>,
    /// Original labels of the nodes collapsed into this one by a merge.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<(Side, String)>,
}

impl PortraitNode {
    fn new(label: String, point: Point, local_degree: usize) -> Self {
        PortraitNode { label, point: Some(point), local_degree, marked: false, boundary_angle: None, members: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalOrbitPortrait {
    pub nodes: Vec<PortraitNode>,
    /// `edges[i]` is the image of node `i`.
    pub edges: Vec<usize>,
    pub relations: Vec<String>,
    /// For merged portraits: the distinguished fixed critical nodes
    /// inherited from `f` and from `g`.
    #[serde(default)]
    pub anchors: Option<(usize, usize)>,
}

impl CriticalOrbitPortrait {
    /// Riemann–Hurwitz budget `Σ (local degree − 1)`.
    pub fn budget(&self) -> usize {
        self.nodes.iter().map(|n| n.local_degree - 1).sum()
    }

    /// Degree implied by the budget, `budget/2 + 1`.
    pub fn implied_degree(&self) -> usize {
        self.budget() / 2 + 1
    }

    pub fn is_critical(&self, i: usize) -> bool {
        self.nodes[i].local_degree > 1
    }

    /// `(preperiod, period)` of the orbit of node `i`.
    pub fn orbit_shape(&self, i: usize) -> (usize, usize) {
        let mut seen = vec![usize::MAX; self.nodes.len()];
        let mut cur = i;
        let mut step = 0;
        while seen[cur] == usize::MAX {
            seen[cur] = step;
            cur = self.edges[cur];
            step += 1;
        }
        (seen[cur], step - seen[cur])
    }

    pub fn marked(&self) -> Option<usize> {
        self.nodes.iter().position(|n| n.marked)
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.label == label)
    }

    /// Flags the fixed critical node at `center` as the marked basin.
    pub fn mark_basin(&mut self, center: Point, d0: usize, tol: f64) -> Result<usize> {
        let idx = self
            .nodes
            .iter()
            .position(|n| n.point.is_some_and(|p| p.chordal(&center) < tol))
            .ok_or_else(|| Error::InvalidMap(format!("{center} is not a critical orbit node")))?;
        if self.edges[idx] != idx || self.nodes[idx].local_degree != d0 {
            return Err(Error::InvalidMap(format!(
                "{center} is not a fixed critical point of local degree {d0}"
            )));
        }
        for n in &mut self.nodes {
            n.marked = false;
        }
        self.nodes[idx].marked = true;
        Ok(idx)
    }

    /// Records, for every node on the boundary of the chart's basin, the
    /// angle of the internal ray landing there.
    pub fn annotate_boundary(&mut self, chart: &BoettcherChart) {
        for i in 0..self.nodes.len() {
            if self.nodes[i].marked {
                continue;
            }
            let Some(Point::Finite(z)) = self.nodes[i].point else { continue };
            let (pre, per) = self.orbit_shape(i);
            self.nodes[i].boundary_angle = chart.boundary_angle(z, pre, per);
        }
    }

    /// Nodes (other than the marked one) whose orbit reaches the marked
    /// node. For a finite orbit this is exactly membership in its basin;
    /// deciding it combinatorially avoids iterating Julia-set points, which
    /// drift off their repelling cycles in floating point.
    pub fn nodes_in_basin(&self) -> Vec<usize> {
        let Some(m) = self.marked() else { return Vec::new() };
        (0..self.nodes.len())
            .filter(|&i| i != m)
            .filter(|&i| {
                let mut cur = i;
                for _ in 0..self.nodes.len() {
                    if cur == m {
                        return true;
                    }
                    cur = self.edges[cur];
                }
                cur == m
            })
            .collect()
    }

    /// The fixed critical node of largest local degree (∞ first on ties).
    fn dominant_fixed_node(&self, skip: Option<usize>) -> Option<usize> {
        (0..self.nodes.len())
            .filter(|&i| Some(i) != skip && self.edges[i] == i && self.is_critical(i))
            .max_by_key(|&i| {
                let inf = self.nodes[i].point.is_some_and(|p| p.is_infinite());
                (self.nodes[i].local_degree, inf, std::cmp::Reverse(i))
            })
    }
}

fn relation_string(label: &str, pre: usize, per: usize) -> String {
    let pow = |k: usize| match k {
        0 => label.to_string(),
        1 => format!("R({label})"),
        k => format!("R^{k}({label})"),
    };
    format!("{} = {}", pow(pre + per), pow(pre))
}

/// Critical-orbit portrait of `map`: every critical point is followed until
/// its orbit revisits a known node (chordal distance below `tol`), and the
/// closing cycle is confirmed by one further turn around it.
pub fn portrait_of(map: &RationalMap, max_steps: usize, tol: f64) -> Result<CriticalOrbitPortrait> {
    let crit = map.critical_points()?;
    let mut nodes: Vec<PortraitNode> = crit
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let label = if c.point.is_infinite() { "inf".to_string() } else { format!("c{i}") };
            PortraitNode::new(label, c.point, c.local_degree)
        })
        .collect();
    let mut edges: Vec<Option<usize>> = vec![None; nodes.len()];
    let find = |nodes: &[PortraitNode], p: &Point| {
        nodes.iter().position(|n| n.point.is_some_and(|q| q.chordal(p) < tol))
    };
    for start in 0..crit.len() {
        let mut cur = start;
        let mut steps = 0;
        while edges[cur].is_none() {
            if steps >= max_steps {
                return Err(Error::NotPostcriticallyFinite { max_steps });
            }
            let img = map.eval(nodes[cur].point.unwrap());
            let next = match find(&nodes, &img) {
                Some(j) => j,
                None => {
                    let label = format!("{}.{}", nodes[start].label, steps + 1);
                    nodes.push(PortraitNode::new(label, img, 1));
                    edges.push(None);
                    nodes.len() - 1
                }
            };
            edges[cur] = Some(next);
            cur = next;
            steps += 1;
        }
    }
    let edges: Vec<usize> = edges.into_iter().map(|e| e.unwrap()).collect();
    let mut portrait = CriticalOrbitPortrait { nodes, edges, relations: Vec::new(), anchors: None };

    // confirm every cycle over one extra period
    for i in 0..portrait.nodes.len() {
        let (pre, per) = portrait.orbit_shape(i);
        if pre == 0 {
            let p = portrait.nodes[i].point.unwrap();
            let back = map.iterate(p, 2 * per);
            if back.chordal(&p) > 10.0 * tol {
                return Err(Error::NotPostcriticallyFinite { max_steps });
            }
        }
    }
    portrait.relations = (0..crit.len())
        .map(|i| {
            let (pre, per) = portrait.orbit_shape(i);
            relation_string(&portrait.nodes[i].label, pre, per)
        })
        .collect();
    Ok(portrait)
}

/// Whether `a/b + c/d ≡ k/m (mod 1)`.
fn angles_glue(f: (u64, u64), g: (u64, u64), k: u64, m: u64) -> bool {
    let (a, b) = (f.0 as u128, f.1 as u128);
    let (c, d) = (g.0 as u128, g.1 as u128);
    let (k, m) = (k as u128, m as u128);
    let modulus = b * d * m;
    (a * d * m + c * b * m + modulus * k - k * b * d) % modulus == 0
}

fn find_root(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    parent[i] = r;
    r
}

/// Target portrait of the mating of `pf` and `pg` along their marked basins,
/// with gluing index `k = 1`.
pub fn merge_portraits(pf: &CriticalOrbitPortrait, pg: &CriticalOrbitPortrait, d0: usize) -> Result<CriticalOrbitPortrait> {
    merge_portraits_with_index(pf, pg, d0, 1)
}

/// Merge for an arbitrary gluing index `1 ≤ k ≤ d0 − 1`.
///
/// Both marked nodes are dropped. A node of `f` and a node of `g` that lie
/// on the glued boundaries at partner angles (`θ_f = k/(d0−1) − θ_g`) are the
/// same point of the mated sphere and become one node, whose criticality is
/// the sum of the two.
pub fn merge_portraits_with_index(
    pf: &CriticalOrbitPortrait,
    pg: &CriticalOrbitPortrait,
    d0: usize,
    k: usize,
) -> Result<CriticalOrbitPortrait> {
    if d0 < 2 || k < 1 || k > d0 - 1 {
        return Err(Error::Invalid(format!("gluing index {k} outside 1..={}", d0.saturating_sub(1))));
    }
    let mut marked = [0usize; 2];
    for (s, p) in [pf, pg].iter().enumerate() {
        let m = p
            .marked()
            .ok_or_else(|| Error::Invalid("portrait has no marked basin".into()))?;
        if p.edges[m] != m || p.nodes[m].local_degree != d0 {
            return Err(Error::Invalid(format!("marked node is not a fixed node of local degree {d0}")));
        }
        if let Some(bad) = (0..p.nodes.len()).find(|&i| i != m && p.edges[i] == m) {
            return Err(Error::Invalid(format!("orbit of {} enters the marked basin", p.nodes[bad].label)));
        }
        marked[s] = m;
    }
    let nf = pf.nodes.len();
    let total = nf + pg.nodes.len();
    let node = |i: usize| if i < nf { &pf.nodes[i] } else { &pg.nodes[i - nf] };
    let image = |i: usize| if i < nf { pf.edges[i] } else { nf + pg.edges[i - nf] };

    let mut parent: Vec<usize> = (0..total).collect();
    for i in 0..nf {
        let Some(af) = pf.nodes[i].boundary_angle else { continue };
        for j in 0..pg.nodes.len() {
            let Some(ag) = pg.nodes[j].boundary_angle else { continue };
            if angles_glue(af, ag, k as u64, (d0 - 1) as u64) {
                let (ri, rj) = (find_root(&mut parent, i), find_root(&mut parent, nf + j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }

    let keep: Vec<usize> = (0..total).filter(|&i| i != marked[0] && i != nf + marked[1]).collect();
    let mut class_index = vec![usize::MAX; total];
    let mut nodes: Vec<PortraitNode> = Vec::new();
    for &i in &keep {
        let r = find_root(&mut parent, i);
        if class_index[r] == usize::MAX {
            class_index[r] = nodes.len();
            nodes.push(PortraitNode {
                label: String::new(),
                point: None,
                local_degree: 1,
                marked: false,
                boundary_angle: None,
                members: Vec::new(),
            });
        }
        let side = if i < nf { Side::F } else { Side::G };
        let n = &mut nodes[class_index[r]];
        n.local_degree += node(i).local_degree - 1;
        n.members.push((side, node(i).label.clone()));
        class_index[i] = class_index[r];
    }
    let mut edges = vec![usize::MAX; nodes.len()];
    for &i in &keep {
        let c = class_index[i];
        let target = class_index[find_root(&mut parent, image(i))];
        if edges[c] != usize::MAX && edges[c] != target {
            return Err(Error::Invalid(format!("glued node {} has two different images", node(i).label)));
        }
        edges[c] = target;
    }
    for (c, n) in nodes.iter_mut().enumerate() {
        n.label = n
            .members
            .iter()
            .map(|(s, l)| format!("{}:{l}", if *s == Side::F { "f" } else { "g" }))
            .collect::<Vec<_>>()
            .join("=");
        if n.members.len() == 1 {
            let (s, l) = &n.members[0];
            let src = if *s == Side::F { pf } else { pg };
            n.point = src.find(l).and_then(|j| src.nodes[j].point);
        }
        let _ = c;
    }

    let expected = 2 * (pf.implied_degree() + pg.implied_degree() - d0) - 2;
    let mut merged = CriticalOrbitPortrait { nodes, edges, relations: Vec::new(), anchors: None };
    let found = merged.budget();
    if found != expected {
        return Err(Error::MalformedMerge { expected, found });
    }
    let anchor = |src: &CriticalOrbitPortrait, off: usize, m: usize| {
        src.dominant_fixed_node(Some(m)).map(|j| class_index[find_root(&mut parent.clone(), off + j)])
    };
    if let (Some(a), Some(b)) = (anchor(pf, 0, marked[0]), anchor(pg, nf, marked[1])) {
        if a != b {
            merged.anchors = Some((a, b));
        }
    }
    merged.relations = (0..merged.nodes.len())
        .filter(|&i| merged.is_critical(i))
        .map(|i| {
            let (pre, per) = merged.orbit_shape(i);
            relation_string(&merged.nodes[i].label, pre, per)
        })
        .collect();
    Ok(merged)
}

/// Reduced fraction helper.
pub fn reduce(num: u64, den: u64) -> (u64, u64) {
    let g = gcd(num, den);
    (num / g, den / g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::C64;

    fn cubic(a: f64) -> RationalMap {
        RationalMap::polynomial(vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(a, 0.0)]).unwrap()
    }

    #[test]
    fn square_portrait() {
        let p = portrait_of(&RationalMap::power(2), 64, PERIOD_TOL).unwrap();
        assert_eq!(p.nodes.len(), 2);
        assert!(p.nodes.iter().all(|n| n.local_degree == 2));
        assert_eq!(p.edges, vec![0, 1]);
        assert_eq!(p.budget(), 2);
    }

    #[test]
    fn cubic_with_fixed_critical_points() {
        let p = portrait_of(&cubic(-2.0 / 9.0), 64, PERIOD_TOL).unwrap();
        assert_eq!(p.nodes.len(), 3);
        for i in 0..3 {
            assert_eq!(p.orbit_shape(i), (0, 1));
        }
        let three = p.nodes.iter().find(|n| n.point.unwrap().chordal(&Point::finite(3.0, 0.0)) < 1e-9);
        assert!(three.is_some());
    }

    #[test]
    fn non_pcf_is_reported() {
        let map = RationalMap::polynomial(vec![C64::new(0.3, 0.1), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        assert!(matches!(portrait_of(&map, 50, PERIOD_TOL), Err(Error::NotPostcriticallyFinite { .. })));
    }

    #[test]
    fn merge_of_squares() {
        let mut a = portrait_of(&RationalMap::power(2), 64, PERIOD_TOL).unwrap();
        a.mark_basin(Point::finite(0.0, 0.0), 2, PERIOD_TOL).unwrap();
        let m = merge_portraits(&a, &a, 2).unwrap();
        assert_eq!(m.nodes.len(), 2);
        assert_eq!(m.implied_degree(), 2);
        assert!(m.nodes.iter().all(|n| n.local_degree == 2));
        assert_eq!(m.anchors, Some((0, 1)));
    }

    #[test]
    fn gluing_angle_arithmetic() {
        assert!(angles_glue((1, 2), (1, 2), 1, 1));
        assert!(angles_glue((0, 1), (0, 1), 1, 1));
        assert!(!angles_glue((1, 4), (1, 4), 1, 1));
        assert!(angles_glue((1, 4), (3, 4), 1, 1));
        // d0 = 3, k = 1: θ_f = 1/2 − θ_g
        assert!(angles_glue((1, 4), (1, 4), 1, 2));
    }

    #[test]
    fn budget_mismatch_is_malformed() {
        let mut a = portrait_of(&RationalMap::power(2), 64, PERIOD_TOL).unwrap();
        a.mark_basin(Point::finite(0.0, 0.0), 2, PERIOD_TOL).unwrap();
        let mut b = a.clone();
        b.nodes[1].local_degree = 3;
        assert!(matches!(merge_portraits(&a, &b, 2), Err(Error::MalformedMerge { .. })));
    }
}
