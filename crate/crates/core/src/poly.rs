//! Dense complex polynomials in ascending-power form and a simultaneous root
//! finder (Aberth–Ehrlich iteration seeded from companion eigenvalues).

use crate::error::{Error, Result};
use crate::sphere::C64;
use nalgebra::DMatrix;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Polynomial with coefficients in ascending powers.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Poly(coeffs)
    }

    pub fn constant(c: C64) -> Self {
        Poly(vec![c])
    }

    pub fn monomial(c: C64, k: usize) -> Self {
        let mut v = vec![ZERO; k + 1];
        v[k] = c;
        Poly(v)
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.0
    }

    /// Degree after ignoring exactly-zero leading coefficients. The zero
    /// polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|c| *c != ZERO).unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.0.get(k).copied().unwrap_or(ZERO)
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.0.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative by one Horner sweep.
    pub fn eval_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.0.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Evaluate the coefficient-reversed polynomial padded to `n`:
    /// `w^n p(1/w)`.
    pub fn eval_reversed(&self, n: usize, w: C64) -> C64 {
        let mut acc = ZERO;
        for k in 0..=n {
            acc = acc * w + self.coeff(k);
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![ZERO]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn scale(&self, s: C64) -> Poly {
        Poly(self.0.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly(vec![ZERO]);
        }
        let mut out = vec![ZERO; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// Multiply by `z^k`.
    pub fn shift_up(&self, k: usize) -> Poly {
        let mut v = vec![ZERO; k];
        v.extend_from_slice(&self.0);
        Poly(v)
    }

    /// Drop leading coefficients whose modulus is at most `tol * max|c|`.
    pub fn trimmed(&self, tol: f64) -> Poly {
        let scale = self.max_abs();
        let mut v = self.0.clone();
        while v.len() > 1 && v.last().is_some_and(|c| c.norm() <= tol * scale) {
            v.pop();
        }
        Poly(v)
    }

    /// Coefficients of `p(z + c)`.
    pub fn taylor_shift(&self, c: C64) -> Poly {
        let mut v = self.0.clone();
        let n = v.len();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let t = v[j + 1] * c;
                v[j] += t;
            }
        }
        Poly(v)
    }

    /// Synthetic division by `(z - a)`; returns quotient and remainder.
    pub fn deflate(&self, a: C64) -> (Poly, C64) {
        let n = self.0.len();
        if n <= 1 {
            return (Poly(vec![ZERO]), self.coeff(0));
        }
        let mut q = vec![ZERO; n - 1];
        let mut acc = self.0[n - 1];
        for k in (0..n - 1).rev() {
            q[k] = acc;
            acc = self.0[k] + acc * a;
        }
        (Poly(q), acc)
    }

    /// Order of vanishing at zero, judged relative to the largest coefficient.
    pub fn order_at_zero(&self, tol: f64) -> usize {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.0
            .iter()
            .position(|c| c.norm() > tol * scale)
            .unwrap_or(self.0.len())
    }
}

/// A root cluster: centroid and multiplicity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cluster {
    pub root: C64,
    pub multiplicity: usize,
}

/// Radius below which roots are merged into one cluster.
pub const CLUSTER_RADIUS: f64 = 1e-6;

/// Eigenvalues of the companion matrix, used as Aberth seeds.
fn companion_seeds(monic: &[C64]) -> Option<Vec<C64>> {
    let n = monic.len() - 1;
    if n == 0 {
        return Some(Vec::new());
    }
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = ONE;
    }
    for i in 0..n {
        m[(i, n - 1)] = -monic[i];
    }
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-15, 2000)?;
    let (_, t) = schur.unpack();
    Some((0..n).map(|i| t[(i, i)]).collect())
}

fn circle_seeds(monic: &[C64]) -> Vec<C64> {
    let n = monic.len() - 1;
    // Cauchy-type bound on root moduli
    let r = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    (0..n)
        .map(|k| C64::from_polar(0.5 * r, 0.4 + std::f64::consts::TAU * k as f64 / n as f64))
        .collect()
}

/// All roots of `p` counted with multiplicity.
///
/// Leading coefficients that vanish exactly are dropped. Roots are refined
/// by Aberth–Ehrlich iteration to relative correction 1e-13 and then given
/// one Newton polish each.
pub fn roots(p: &Poly) -> Result<Vec<C64>> {
    let deg = p.degree();
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = p.0[deg];
    let monic: Vec<C64> = p.0[..=deg].iter().map(|c| c / lead).collect();
    let q = Poly(monic.clone());
    let dq = q.derivative();

    let mut z = companion_seeds(&monic)
        .filter(|s| s.iter().all(|r| r.re.is_finite() && r.im.is_finite()))
        .unwrap_or_else(|| circle_seeds(&monic));
    // nudge coincident seeds apart so the Aberth sum stays finite
    for i in 0..z.len() {
        for j in 0..i {
            if (z[i] - z[j]).norm() < 1e-12 * (1.0 + z[i].norm()) {
                let bump = C64::new(1e-9, 1.3e-9) * (1.0 + z[i].norm()) * (i as f64);
                z[i] += bump;
            }
        }
    }

    let mut converged = vec![false; deg];
    for _ in 0..500 {
        let mut all = true;
        for i in 0..deg {
            if converged[i] {
                continue;
            }
            let (pv, dpv) = (q.eval(z[i]), dq.eval(z[i]));
            if pv == ZERO {
                converged[i] = true;
                continue;
            }
            let ratio = pv / dpv;
            let mut sum = ZERO;
            for j in 0..deg {
                if j != i {
                    let d = z[i] - z[j];
                    if d != ZERO {
                        sum += d.inv();
                    }
                }
            }
            let denom = ONE - ratio * sum;
            let step = if denom.norm() > 0.0 && ratio.re.is_finite() {
                ratio / denom
            } else {
                ratio
            };
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] -= step;
            if step.norm() <= 1e-13 * (1.0 + z[i].norm()) {
                converged[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }

    // one Newton polish per root, kept only if it reduces the residual
    for zi in z.iter_mut() {
        let (pv, dpv) = q.eval_with_derivative(*zi);
        if dpv != ZERO {
            let cand = *zi - pv / dpv;
            if cand.re.is_finite() && q.eval(cand).norm() <= pv.norm() {
                *zi = cand;
            }
        }
    }

    let scale: f64 = monic.iter().map(|c| c.norm()).sum();
    let worst = z
        .iter()
        .map(|&r| q.eval(r).norm() / (scale * (1.0 + r.norm()).powi(deg as i32)))
        .fold(0.0, f64::max);
    if !worst.is_finite() || worst > 1e-6 {
        return Err(Error::RootsNotConverged { residual: worst });
    }
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(z)
}

/// Group roots closer than `radius` into clusters with summed multiplicity.
pub fn cluster_roots(roots: &[C64], radius: f64) -> Vec<Cluster> {
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    let mut members: Vec<Vec<C64>> = Vec::new();
    for &r in roots {
        match clusters
            .iter()
            .position(|(c, _)| (*c - r).norm() < radius * (1.0 + r.norm()))
        {
            Some(k) => {
                members[k].push(r);
                let n = members[k].len() as f64;
                clusters[k].0 = members[k].iter().sum::<C64>() / n;
                clusters[k].1 += 1;
            }
            None => {
                clusters.push((r, 1));
                members.push(vec![r]);
            }
        }
    }
    clusters
        .into_iter()
        .map(|(root, multiplicity)| Cluster { root, multiplicity })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn square_roots_of_four() {
        let r = roots(&Poly::from_real(&[-4.0, 0.0, 1.0])).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - c(-2.0, 0.0)).norm() < 1e-13);
        assert!((r[1] - c(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn double_root_clusters() {
        let r = roots(&Poly::from_real(&[0.0, 0.0, 1.0])).unwrap();
        let cl = cluster_roots(&r, CLUSTER_RADIUS);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].multiplicity, 2);
        assert!(cl[0].root.norm() < 1e-7);
    }

    #[test]
    fn taylor_shift_matches_evaluation() {
        let p = Poly::new(vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.25, 0.0), c(2.0, -1.0)]);
        let s = c(0.3, -0.7);
        let q = p.taylor_shift(s);
        for z in [c(0.0, 0.0), c(1.5, 0.2), c(-0.4, 2.0)] {
            assert!((q.eval(z) - p.eval(z + s)).norm() < 1e-12);
        }
    }

    #[test]
    fn deflation_remainder_is_value() {
        let p = Poly::from_real(&[2.0, -3.0, 0.0, 1.0]);
        let (q, rem) = p.deflate(c(1.0, 0.0));
        assert!(rem.norm() < 1e-15);
        assert_eq!(q.degree(), 2);
    }

    proptest! {
        #[test]
        fn roots_reconstruct_polynomial(re in proptest::collection::vec(-3.0f64..3.0, 8),
                                        im in proptest::collection::vec(-3.0f64..3.0, 8)) {
            let zs: Vec<C64> = re.iter().zip(&im).map(|(&a, &b)| c(a, b)).collect();
            let mut p = Poly::constant(c(1.0, 0.0));
            for &z in &zs {
                p = p.mul(&Poly::new(vec![-z, c(1.0, 0.0)]));
            }
            let found = roots(&p).unwrap();
            prop_assert_eq!(found.len(), 8);
            for r in found {
                prop_assert!(p.eval(r).norm() < 1e-8 * p.max_abs() * (1.0 + r.norm()).powi(8));
            }
        }
    }
}
