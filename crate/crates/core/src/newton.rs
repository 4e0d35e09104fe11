//! Damped Newton iteration for small square nonlinear systems with a
//! central-difference Jacobian.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Maximum number of step halvings per iteration.
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-12, max_iter: 100, fd_step: 1e-7, max_halvings: 30 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonSolution {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn norm(v: &[f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n.is_finite() {
        n
    } else {
        f64::INFINITY
    }
}

/// Solves `residual(x) = 0` from `seed`.
///
/// A full step that does not decrease the residual norm is halved until it
/// does; when no halving helps the iteration stops with
/// [`Error::NonConvergence`].
pub fn newton_solve<F>(residual: F, seed: &[f64], opts: &NewtonOptions) -> Result<NewtonSolution>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = seed.len();
    let mut x = seed.to_vec();
    let mut r = residual(&x);
    if r.len() != n {
        return Err(Error::Invalid(format!("system is {}x{}, not square", r.len(), n)));
    }
    let mut rn = norm(&r);
    if !rn.is_finite() {
        return Err(Error::NonConvergence { iterations: 0, best_residual: rn });
    }
    for it in 0..opts.max_iter {
        if rn < opts.tol {
            return Ok(NewtonSolution { x, residual: rn, iterations: it });
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = opts.fd_step * x[j].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (rp, rm) = (residual(&xp), residual(&xm));
            for i in 0..n {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        if jac.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergence { iterations: it, best_residual: rn });
        }
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let step = match jac.clone().lu().solve(&rhs) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => return Err(Error::SingularJacobian { residual: rn }),
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            let rc = residual(&cand);
            let rcn = norm(&rc);
            if rcn < rn {
                x = cand;
                r = rc;
                rn = rcn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if rn < opts.tol {
                break;
            }
            return Err(Error::NonConvergence { iterations: it, best_residual: rn });
        }
    }
    if rn < opts.tol {
        Ok(NewtonSolution { x, residual: rn, iterations: opts.max_iter })
    } else {
        Err(Error::NonConvergence { iterations: opts.max_iter, best_residual: rn })
    }
}

/// Continues Newton steps from `x` while they keep reducing the residual and
/// returns the best point seen. Used after [`newton_solve`] to drive a root
/// to working precision, so that roots of high multiplicity get close enough
/// to be recognized.
pub fn newton_refine<F>(residual: F, x: &[f64], max_iter: usize, fd_step: f64) -> NewtonSolution
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut best = x.to_vec();
    let mut best_res = norm(&residual(&best));
    let mut iterations = 0;
    for _ in 0..max_iter {
        let Some(next) = single_step(&residual, &best, fd_step) else { break };
        let r = norm(&residual(&next));
        if r < best_res {
            best = next;
            best_res = r;
            iterations += 1;
        } else {
            break;
        }
    }
    NewtonSolution { x: best, residual: best_res, iterations }
}

fn single_step<F>(residual: &F, x: &[f64], fd_step: f64) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let r = residual(x);
    let rn = norm(&r);
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let h = fd_step * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (rp, rm) = (residual(&xp), residual(&xm));
        for i in 0..n {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
    let step = jac.lu().solve(&rhs)?;
    let mut t = 1.0;
    for _ in 0..30 {
        let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
        if norm(&residual(&cand)) < rn {
            return Some(cand);
        }
        t *= 0.5;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_two() {
        let s = newton_solve(|a| vec![a[0] * a[0] - 2.0], &[1.0], &NewtonOptions::default()).unwrap();
        assert!((s.x[0] - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn cubic_critical_fixed_point() {
        // f_a(c_a) = c_a for f_a(z) = z^2 + a z^3, c_a = -2/(3a), real slice
        let res = |a: &[f64]| {
            let c = -2.0 / (3.0 * a[0]);
            vec![c * c + a[0] * c * c * c - c]
        };
        let s = newton_solve(res, &[-0.3], &NewtonOptions::default()).unwrap();
        assert!((s.x[0] + 2.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let e = newton_solve(|a| vec![a[0] * a[0] + 1.0], &[0.5], &NewtonOptions { max_iter: 20, ..Default::default() });
        assert!(matches!(e, Err(Error::NonConvergence { .. }) | Err(Error::SingularJacobian { .. })));
    }

    #[test]
    fn refine_pushes_double_root_closer() {
        let res = |a: &[f64]| vec![(a[0] - 1.0) * (a[0] - 1.0)];
        let s = newton_solve(res, &[1.5], &NewtonOptions { tol: 1e-12, ..Default::default() }).unwrap();
        let r = newton_refine(res, &s.x, 60, 1e-7);
        assert!((r.x[0] - 1.0).abs() < (s.x[0] - 1.0).abs());
        assert!((r.x[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn two_by_two_system() {
        let res = |x: &[f64]| vec![x[0] * x[0] + x[1] * x[1] - 4.0, x[0] - x[1]];
        let s = newton_solve(res, &[1.0, 0.5], &NewtonOptions::default()).unwrap();
        assert!((s.x[0] - 2f64.sqrt()).abs() < 1e-12 && (s.x[1] - 2f64.sqrt()).abs() < 1e-12);
    }
}
