use std::time::Instant;

use crate::error::{MfmfeError, Result};
use crate::solver::SolveStats;
use crate::sparse::{dot, norm, CsrMatrix};

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖` recomputed from the final iterate.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients from a zero initial guess. With
/// `flexible` the Polak-Ribière update tolerates a preconditioner that
/// varies between iterations (an inexact inner solve).
pub fn pcg<A, M>(apply: A, precond: M, b: &[f64], tol: f64, max_iter: usize, flexible: bool) -> PcgOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return PcgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut it = 0;
    let mut relres = 1.0;
    let mut restarts = 0;
    while it < max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap.is_nan() || pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        let r_old = if flexible { Some(r.clone()) } else { None };
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        relres = norm(&r) / bnorm;
        if relres <= tol {
            // guard against drift of the recursive residual
            let ax = apply(&x);
            let true_r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            relres = norm(&true_r) / bnorm;
            if relres <= tol || restarts >= 3 {
                break;
            }
            restarts += 1;
            r = true_r;
            z = precond(&r);
            p = z.clone();
            rz = dot(&r, &z);
            continue;
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = match &r_old {
            Some(ro) => {
                let diff: f64 = z
                    .iter()
                    .zip(r.iter().zip(ro))
                    .map(|(zi, (ri, roi))| zi * (ri - roi))
                    .sum();
                diff / rz
            }
            None => rz_new / rz,
        };
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    PcgOutcome {
        x,
        iterations: it,
        relative_residual: relres,
        converged: relres <= tol,
    }
}

/// Jacobi-preconditioned CG for an SPD sparse matrix.
pub fn solve_cg(s: &CsrMatrix, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let start = Instant::now();
    let inv_diag: Vec<f64> = s.diagonal().iter().map(|d| 1.0 / d).collect();
    let out = pcg(
        |x| s.mul_vec(x),
        |r| r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect(),
        rhs,
        tol,
        max_iter,
        false,
    );
    let stats = SolveStats {
        iterations: out.iterations,
        relative_residual: out.relative_residual,
        assemble_seconds: 0.0,
        solve_seconds: start.elapsed().as_secs_f64(),
    };
    if !out.converged {
        return Err(MfmfeError::Convergence { stats });
    }
    Ok((out.x, stats))
}
