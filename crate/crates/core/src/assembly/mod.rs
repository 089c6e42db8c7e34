//! Discrete operators: the Gauss-Lobatto velocity mass matrix as node
//! blocks, the divergence matrix, right-hand sides and the exactly
//! integrated Raviart-Thomas mass matrix used for comparison.

mod forms;

use nalgebra::{DMatrix, Matrix3, Vector3};
use rayon::prelude::*;

use crate::dofmap::{DofMap, NodeBlocks};
use crate::error::{MfmfeError, Result};
use crate::mesh::{MapPoint, Mesh};
use crate::refbasis::NodalBasis;

pub use forms::{assemble_div, assemble_rhs, assemble_rt_mass, project_dirichlet, FacetProjection};

/// Problem data: permeability, source and Dirichlet datum. In 2d only the
/// leading 2x2 block of the permeability is used.
pub trait CoefficientField: Sync {
    fn permeability(&self, x: &Vector3<f64>) -> Matrix3<f64>;
    fn source(&self, x: &Vector3<f64>) -> f64;
    fn dirichlet(&self, x: &Vector3<f64>) -> f64;
}

fn embedded(k: &Matrix3<f64>, dim: usize) -> Matrix3<f64> {
    let mut m = *k;
    if dim == 2 {
        m[(0, 2)] = 0.0;
        m[(1, 2)] = 0.0;
        m[(2, 0)] = 0.0;
        m[(2, 1)] = 0.0;
        m[(2, 2)] = 1.0;
    }
    m
}

/// `K⁻¹` for a symmetric positive definite permeability.
pub fn permeability_inverse(k: &Matrix3<f64>, dim: usize) -> Result<Matrix3<f64>> {
    let k = embedded(k, dim);
    let scale = k.amax();
    if (k - k.transpose()).amax() > 1e-12 * scale {
        return Err(MfmfeError::Coefficient(format!("permeability not symmetric: {k}")));
    }
    let chol = k
        .cholesky()
        .ok_or_else(|| MfmfeError::Coefficient(format!("permeability not positive definite: {k}")))?;
    Ok(chol.inverse())
}

/// Mapped permeability `𝒦 = J DF⁻¹ K DF⁻ᵀ` at a mapped point.
pub fn mapped_permeability(mp: &MapPoint, k: &Matrix3<f64>, dim: usize) -> Matrix3<f64> {
    let mut m = mp.df_inv * embedded(k, dim) * mp.df_inv.transpose() * mp.jac;
    if dim == 2 {
        m[(2, 2)] = 0.0;
    }
    m
}

/// `𝒦⁻¹ = (1/J) DFᵀ K⁻¹ DF`; zero third row and column in 2d.
pub fn mapped_permeability_inverse(mp: &MapPoint, k: &Matrix3<f64>, dim: usize) -> Result<Matrix3<f64>> {
    let kinv = permeability_inverse(k, dim)?;
    let mut m = mp.df.transpose() * kinv * mp.df / mp.jac;
    if dim == 2 {
        for i in 0..3 {
            m[(2, i)] = 0.0;
            m[(i, 2)] = 0.0;
        }
    }
    Ok(m)
}

/// Symmetric matrix acting on a subset of the unknowns.
#[derive(Debug, Clone)]
pub struct DenseBlock {
    pub dofs: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

/// Block-diagonal matrix whose blocks act on disjoint unknown sets.
#[derive(Debug, Clone)]
pub struct BlockDiagonalMatrix {
    pub n: usize,
    pub blocks: Vec<DenseBlock>,
}

impl BlockDiagonalMatrix {
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for b in &self.blocks {
            for (r, &gr) in b.dofs.iter().enumerate() {
                y[gr] += b
                    .dofs
                    .iter()
                    .enumerate()
                    .map(|(c, &gc)| b.matrix[(r, c)] * x[gc])
                    .sum::<f64>();
            }
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for b in &self.blocks {
            for (r, &gr) in b.dofs.iter().enumerate() {
                for (c, &gc) in b.dofs.iter().enumerate() {
                    m[(gr, gc)] += b.matrix[(r, c)];
                }
            }
        }
        m
    }
}

/// Velocity mass matrix under the Gauss-Lobatto rule, one dense block per
/// global quadrature node. Entry `(a, b)` of a block sums
/// `w_i (𝒦⁻¹)_{jm}(p̂_i) σ_a σ_b` over the cells meeting at the node.
pub fn assemble_mass_blocks<C: CoefficientField + ?Sized>(
    mesh: &Mesh,
    dofs: &DofMap,
    blocks: &NodeBlocks,
    basis: &NodalBasis,
    coeff: &C,
) -> Result<BlockDiagonalMatrix> {
    let dim = mesh.dim();
    let nodes = basis.nodes();
    let out: Result<Vec<DenseBlock>> = blocks
        .blocks()
        .par_iter()
        .map(|blk| {
            let m = blk.dofs.len();
            let mut mat = DMatrix::zeros(m, m);
            let pos = |g: usize| blk.dofs.binary_search(&g).expect("DOF belongs to its node block");
            for &(c, i) in &blk.members {
                let xh = &nodes.nodes[i];
                let mp = mesh.geometry(c).map_point(xh)?;
                let kinv = mapped_permeability_inverse(&mp, &coeff.permeability(&mp.x), dim)?;
                let w = nodes.weights[i];
                let cd = dofs.cell_dofs(c);
                for j in 0..dim {
                    let Some((gj, sj)) = cd[i * dim + j] else { continue };
                    for l in 0..dim {
                        let Some((gl, sl)) = cd[i * dim + l] else { continue };
                        mat[(pos(gj), pos(gl))] += w * kinv[(j, l)] * sj * sl;
                    }
                }
            }
            Ok(DenseBlock {
                dofs: blk.dofs.clone(),
                matrix: mat,
            })
        })
        .collect();
    Ok(BlockDiagonalMatrix {
        n: dofs.num_velocity(),
        blocks: out?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{structured_mesh, CellGeometry};
    use crate::quadrature::{gauss_rule, tensor_rule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) struct Constant(pub Matrix3<f64>);

    impl CoefficientField for Constant {
        fn permeability(&self, _: &Vector3<f64>) -> Matrix3<f64> {
            self.0
        }
        fn source(&self, _: &Vector3<f64>) -> f64 {
            1.0
        }
        fn dirichlet(&self, _: &Vector3<f64>) -> f64 {
            0.0
        }
    }

    fn random_quad(rng: &mut ChaCha8Rng) -> CellGeometry {
        let mut c = [[0.0; 3]; 8];
        let base = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        for i in 0..4 {
            c[i] = [
                base[i][0] + rng.gen_range(-0.2..0.2),
                base[i][1] + rng.gen_range(-0.2..0.2),
                0.0,
            ];
        }
        CellGeometry::new(0, 2, c)
    }

    #[test]
    fn mapped_permeability_two_formulas_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let g = random_quad(&mut rng);
            let mp = g.map_point(&[rng.gen(), rng.gen(), 0.0]).unwrap();
            let a = rng.gen_range(-0.5..0.5);
            let k = Matrix3::new(2.0, a, 0.0, a, 1.5, 0.0, 0.0, 0.0, 1.0);
            let kk = mapped_permeability(&mp, &k, 2);
            let ki = mapped_permeability_inverse(&mp, &k, 2).unwrap();
            let prod = (kk * ki).fixed_view::<2, 2>(0, 0).into_owned();
            assert!((prod - nalgebra::Matrix2::identity()).amax() < 1e-12);
        }
    }

    #[test]
    fn affine_scaling_is_invariant_in_2d() {
        let g = CellGeometry::new(
            0,
            2,
            [
                [0., 0., 0.],
                [0.5, 0., 0.],
                [0.5, 0.5, 0.],
                [0., 0.5, 0.],
                [0.; 3],
                [0.; 3],
                [0.; 3],
                [0.; 3],
            ],
        );
        let mp = g.map_point(&[0.3, 0.3, 0.0]).unwrap();
        let ki = mapped_permeability_inverse(&mp, &Matrix3::identity(), 2).unwrap();
        assert!((ki.fixed_view::<2, 2>(0, 0).into_owned() - nalgebra::Matrix2::identity()).amax() < 1e-15);
    }

    #[test]
    fn rejects_indefinite_permeability() {
        let mp = CellGeometry::new(
            0,
            2,
            [
                [0., 0., 0.],
                [1., 0., 0.],
                [1., 1., 0.],
                [0., 1., 0.],
                [0.; 3],
                [0.; 3],
                [0.; 3],
                [0.; 3],
            ],
        )
        .map_point(&[0.5, 0.5, 0.0])
        .unwrap();
        let k = Matrix3::new(1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            mapped_permeability_inverse(&mp, &k, 2),
            Err(MfmfeError::Coefficient(_))
        ));
    }

    fn mass_setup(dim: usize, n: [usize; 3], k: usize) -> (Mesh, NodalBasis, DofMap, BlockDiagonalMatrix) {
        let m = structured_mesh(dim, n, |x| x).unwrap();
        let b = NodalBasis::new(dim, k).unwrap();
        let d = DofMap::new(&m, &b).unwrap();
        let nb = NodeBlocks::new(&m, &b, &d);
        let a = assemble_mass_blocks(&m, &d, &nb, &b, &Constant(Matrix3::identity())).unwrap();
        (m, b, d, a)
    }

    #[test]
    fn interior_node_block_is_weighted_identity() {
        let (_, b, _, a) = mass_setup(2, [1, 1, 1], 2);
        // the center GL node has weight (2/3)^2 on [0,1]^2
        let center = b.nodes().linear_index(&[1, 1, 0]);
        let w = b.nodes().weights[center];
        assert!((w - 4.0 / 9.0).abs() < 1e-15);
        let blk = a.blocks.iter().find(|bl| bl.dofs.contains(&(2 * center))).unwrap();
        assert_eq!(blk.dofs.len(), 2);
        assert!((&blk.matrix - DMatrix::identity(2, 2) * w).amax() < 1e-15);
    }

    /// Dense oracle: the global quadrature mass form assembled cell by cell.
    fn dense_oracle(mesh: &Mesh, b: &NodalBasis, d: &DofMap) -> DMatrix<f64> {
        let dim = mesh.dim();
        let mut m = DMatrix::zeros(d.num_velocity(), d.num_velocity());
        let tab = b.tabulate(&b.nodes().nodes);
        for c in 0..mesh.num_cells() {
            let g = mesh.geometry(c);
            let cd = d.cell_dofs(c);
            for (p, xh) in b.nodes().nodes.iter().enumerate() {
                let mp = g.map_point(xh).unwrap();
                let ki = mapped_permeability_inverse(&mp, &Matrix3::identity(), dim).unwrap();
                for (a1, d1) in cd.iter().enumerate() {
                    for (a2, d2) in cd.iter().enumerate() {
                        if let (Some((g1, s1)), Some((g2, s2))) = (d1, d2) {
                            let v = (ki * tab.value(p, a2)).dot(tab.value(p, a1));
                            m[(*g1, *g2)] += b.nodes().weights[p] * v * s1 * s2;
                        }
                    }
                }
            }
        }
        m
    }

    #[test]
    fn blocks_match_dense_oracle() {
        for (dim, n, k) in [(2, [2, 1, 1], 1), (2, [2, 2, 1], 2), (3, [2, 1, 1], 1)] {
            let m = structured_mesh(dim, n, |[x, y, z]| [x + 0.1 * y * y, y + 0.05 * x, z]).unwrap();
            let b = NodalBasis::new(dim, k).unwrap();
            let d = DofMap::new(&m, &b).unwrap();
            let nb = NodeBlocks::new(&m, &b, &d);
            let a = assemble_mass_blocks(&m, &d, &nb, &b, &Constant(Matrix3::identity())).unwrap();
            assert!((a.to_dense() - dense_oracle(&m, &b, &d)).amax() < 1e-13);
        }
    }

    #[test]
    fn shared_edge_node_block_is_three_by_three() {
        let (_, _, _, a) = mass_setup(2, [2, 1, 1], 1);
        let sizes: Vec<usize> = a.blocks.iter().map(|b| b.dofs.len()).collect();
        assert_eq!(sizes.iter().filter(|&&s| s == 3).count(), 2);
    }

    #[test]
    fn quadrature_norm_is_equivalent_to_exact_norm() {
        let (m, b, d, a) = mass_setup(2, [1, 1, 1], 2);
        let g = tensor_rule(&gauss_rule(5).unwrap().to_unit(), 2).unwrap();
        let tab = b.tabulate(&g.nodes);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let geom = m.geometry(0);
        for _ in 0..100 {
            let x: Vec<f64> = (0..d.num_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let q = a.mul_vec(&x).iter().zip(&x).map(|(u, v)| u * v).sum::<f64>();
            let mut exact = 0.0;
            for (p, w) in g.weights.iter().enumerate() {
                let mp = geom.map_point(&g.nodes[p]).unwrap();
                let mut v = Vector3::zeros();
                for (aa, da) in d.cell_dofs(0).iter().enumerate() {
                    let (gi, s) = da.unwrap();
                    v += tab.value(p, aa) * (x[gi] * s);
                }
                exact += w * v.norm_squared() / mp.jac;
            }
            let ratio = q / exact;
            assert!(ratio > 0.2 && ratio < 5.0, "{ratio}");
        }
    }
}
