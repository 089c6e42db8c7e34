use std::time::Instant;

use log::warn;

use super::{pcg, SolveStats};
use crate::error::{MfmfeError, Result};
use crate::sparse::CsrMatrix;

/// Solves `A U - Bᵀ P = G`, `B U = F` for a sparse SPD `A` that cannot be
/// inverted locally. Outer flexible PCG on `S = B A⁻¹ Bᵀ` with inner
/// Jacobi-CG solves for `A⁻¹`, preconditioned by an approximate solve with
/// `B diag(A)⁻¹ Bᵀ`. Returns `(U, P, stats)`.
pub fn solve_rt_schur(
    a: &CsrMatrix,
    b: &CsrMatrix,
    g: &[f64],
    f: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>, SolveStats)> {
    let start = Instant::now();
    let bt = b.transpose();
    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let inner_tol = (1e-2 * tol).max(1e-15);
    let inner_max = 20 * a.nrows().max(100);
    let a_solve = |x: &[f64]| -> Vec<f64> {
        let out = pcg(
            |v| a.mul_vec(v),
            |r| r.iter().zip(&inv_diag).map(|(p, q)| p * q).collect(),
            x,
            inner_tol,
            inner_max,
            false,
        );
        if !out.converged {
            warn!(
                "inner velocity solve stopped at relative residual {:.2e}",
                out.relative_residual
            );
        }
        out.x
    };

    let approx = b.scaled_gram(&inv_diag);
    let approx_inv_diag: Vec<f64> = approx.diagonal().iter().map(|d| 1.0 / d).collect();
    let precond = |r: &[f64]| -> Vec<f64> {
        pcg(
            |v| approx.mul_vec(v),
            |v| v.iter().zip(&approx_inv_diag).map(|(p, q)| p * q).collect(),
            r,
            1e-3,
            1000,
            false,
        )
        .x
    };

    let ag = a_solve(g);
    let bag = b.mul_vec(&ag);
    let rhs: Vec<f64> = f.iter().zip(&bag).map(|(fi, x)| fi - x).collect();
    let out = pcg(
        |p| b.mul_vec(&a_solve(&bt.mul_vec(p))),
        precond,
        &rhs,
        tol,
        max_iter,
        true,
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
    let btp = bt.mul_vec(&out.x);
    let urhs: Vec<f64> = g.iter().zip(&btp).map(|(x, y)| x + y).collect();
    let u = a_solve(&urhs);
    let stats = SolveStats {
        solve_seconds: start.elapsed().as_secs_f64(),
        ..stats
    };
    Ok((u, out.x, stats))
}
