use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use crate::assembly::BlockDiagonalMatrix;
use crate::error::{MfmfeError, Result};

/// Cholesky factors of the node blocks of the velocity mass matrix.
#[derive(Debug, Clone)]
pub struct FactorizedBlocks {
    n: usize,
    blocks: Vec<(Vec<usize>, Cholesky<f64, Dyn>)>,
}

pub fn factorize_blocks(a: &BlockDiagonalMatrix) -> Result<FactorizedBlocks> {
    let blocks: Result<Vec<_>> = a
        .blocks
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            Cholesky::new(b.matrix.clone())
                .map(|c| (b.dofs.clone(), c))
                .ok_or(MfmfeError::Elimination { block: i })
        })
        .collect();
    Ok(FactorizedBlocks {
        n: a.n,
        blocks: blocks?,
    })
}

impl FactorizedBlocks {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dofs(&self, b: usize) -> &[usize] {
        &self.blocks[b].0
    }

    pub fn factor(&self, b: usize) -> &Cholesky<f64, Dyn> {
        &self.blocks[b].1
    }

    /// Lower triangular factor of block `b`.
    pub fn lower(&self, b: usize) -> DMatrix<f64> {
        self.blocks[b].1.l()
    }

    /// `A⁻¹ x`.
    pub fn solve(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let parts: Vec<DVector<f64>> = self
            .blocks
            .par_iter()
            .map(|(dofs, ch)| ch.solve(&DVector::from_iterator(dofs.len(), dofs.iter().map(|&g| x[g]))))
            .collect();
        let mut y = vec![0.0; self.n];
        for ((dofs, _), part) in self.blocks.iter().zip(&parts) {
            for (&g, v) in dofs.iter().zip(part.iter()) {
                y[g] = *v;
            }
        }
        y
    }
}
