use nalgebra::DMatrix;
use rayon::prelude::*;

use super::FactorizedBlocks;
use crate::sparse::{dot, CsrMatrix};

const CHUNK: usize = 1024;

/// Pressure system `S P = rhs` left after eliminating the velocity.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub s: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Local contribution of one node block: pressure indices and
/// `Dᵀ_bᵀ A_b⁻¹ Dᵀ_b`.
fn block_product(factors: &FactorizedBlocks, dt: &CsrMatrix, b: usize) -> (Vec<usize>, DMatrix<f64>) {
    let dofs = factors.dofs(b);
    let mut cols: Vec<usize> = dofs.iter().flat_map(|&g| dt.row(g).0.iter().copied()).collect();
    cols.sort_unstable();
    cols.dedup();
    let mut local = DMatrix::zeros(dofs.len(), cols.len());
    for (r, &g) in dofs.iter().enumerate() {
        let (cs, vs) = dt.row(g);
        for (&c, &v) in cs.iter().zip(vs) {
            let j = cols.binary_search(&c).expect("column collected above");
            local[(r, j)] = v;
        }
    }
    let x = factors.factor(b).solve(&local);
    (cols, local.transpose() * x)
}

/// Forms `S = D A⁻¹ Dᵀ` and `rhs = F - D A⁻¹ G`, where `D` is the
/// pressure-by-velocity divergence matrix. Block products are computed in
/// parallel and scattered in block order, so the result is deterministic.
pub fn reduce(factors: &FactorizedBlocks, d: &CsrMatrix, g: &[f64], f: &[f64]) -> ReducedSystem {
    let dt = d.transpose();
    let np = d.nrows();
    let nb = factors.len();

    let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); np];
    for b in 0..nb {
        let mut cols: Vec<usize> = factors
            .dofs(b)
            .iter()
            .flat_map(|&v| dt.row(v).0.iter().copied())
            .collect();
        cols.sort_unstable();
        cols.dedup();
        for &i in &cols {
            pattern[i].extend_from_slice(&cols);
        }
    }
    for row in &mut pattern {
        row.sort_unstable();
        row.dedup();
    }
    let mut s = CsrMatrix::from_pattern(np, pattern);

    for start in (0..nb).step_by(CHUNK) {
        let end = (start + CHUNK).min(nb);
        let parts: Vec<_> = (start..end)
            .into_par_iter()
            .map(|b| block_product(factors, &dt, b))
            .collect();
        for (cols, m) in parts {
            for (i, &ci) in cols.iter().enumerate() {
                for (j, &cj) in cols.iter().enumerate() {
                    s.add_to(ci, cj, m[(i, j)]);
                }
            }
        }
    }

    let ag = factors.solve(g);
    let dag = d.mul_vec(&ag);
    let rhs = f.iter().zip(&dag).map(|(fi, di)| fi - di).collect();
    ReducedSystem { s, rhs }
}

/// `U = A⁻¹ (G + Dᵀ P)`.
pub fn recover_velocity(factors: &FactorizedBlocks, d: &CsrMatrix, g: &[f64], p: &[f64]) -> Vec<f64> {
    let dtp = d.transpose().mul_vec(p);
    let rhs: Vec<f64> = g.iter().zip(&dtp).map(|(a, b)| a + b).collect();
    factors.solve(&rhs)
}

/// Residuals `(‖A U - Dᵀ P - G‖, ‖D U - F‖)` of the saddle-point system.
pub fn saddle_residuals(
    a: &crate::assembly::BlockDiagonalMatrix,
    d: &CsrMatrix,
    g: &[f64],
    f: &[f64],
    u: &[f64],
    p: &[f64],
) -> (f64, f64) {
    let au = a.mul_vec(u);
    let dtp = d.transpose().mul_vec(p);
    let r1: Vec<f64> = (0..u.len()).map(|i| au[i] - dtp[i] - g[i]).collect();
    let du = d.mul_vec(u);
    let r2: Vec<f64> = (0..p.len()).map(|i| du[i] - f[i]).collect();
    (dot(&r1, &r1).sqrt(), dot(&r2, &r2).sqrt())
}
