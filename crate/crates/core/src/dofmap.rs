//! Global numbering of velocity and pressure degrees of freedom.
//!
//! A local velocity DOF `(node i, direction j)` is a facet-normal DOF when
//! node `i` lies on the facet `x̂_j ∈ {0,1}`. Facet-normal DOFs are merged
//! across interior facets; the global value is the reference normal
//! component seen by the first cell visited, and the other cell sees it
//! multiplied by a sign `σ`.
//! Normal DOFs on Neumann facets are constrained to zero and dropped.
//! All other local DOFs stay private to their cell.

use std::collections::HashMap;

use crate::error::{MfmfeError, Result};
use crate::mesh::{BoundaryTag, Mesh, NodeKey, Pos};
use crate::refbasis::{NodalBasis, RtElement};

/// First cell seeing a shared DOF: `(cell, local facet, reference point)`.
type Located = (usize, usize, [f64; 3]);

/// Where a local DOF lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofKind {
    /// Normal DOF on an interior facet, shared by two cells.
    SharedNormal,
    /// Normal DOF on a Dirichlet boundary facet.
    BoundaryNormal,
    /// Tangential DOF at a node on the cell boundary.
    Tangential,
    /// DOF at a node in the cell interior.
    Interior,
}

/// Local-to-global map for one cell: `None` for constrained DOFs.
pub type LocalDof = Option<(usize, f64)>;

/// Velocity DOFs sharing one global quadrature node.
#[derive(Debug, Clone)]
pub struct NodeBlock {
    pub key: NodeKey,
    /// Global DOFs, sorted.
    pub dofs: Vec<usize>,
    /// `(cell, local node)` pairs located at this node.
    pub members: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct DofMap {
    dim: usize,
    nloc: usize,
    num_velocity: usize,
    pressure_per_cell: usize,
    num_cells: usize,
    cell_dofs: Vec<LocalDof>,
    kinds: Vec<DofKind>,
    num_constrained: usize,
}

impl DofMap {
    /// Numbers the enhanced-space DOFs of `mesh`.
    pub fn new(mesh: &Mesh, basis: &NodalBasis) -> Result<DofMap> {
        let dim = mesh.dim();
        let k = basis.k();
        let nodes: Vec<[usize; 3]> = (0..basis.num_nodes()).map(|i| basis.node_index(i)).collect();
        let info = |a: usize| -> (Option<usize>, [Pos; 3], [f64; 3]) {
            let (i, j) = (a / dim, a % dim);
            let idx = nodes[i];
            let mut pos = [Pos::Lo; 3];
            for (ax, p) in pos.iter_mut().enumerate().take(dim) {
                *p = match idx[ax] {
                    0 => Pos::Lo,
                    t if t == k => Pos::Hi,
                    t => Pos::In { t, n: k + 1 },
                };
            }
            let lf = match idx[j] {
                0 => Some(2 * j),
                t if t == k => Some(2 * j + 1),
                _ => None,
            };
            (lf, pos, basis.nodes().nodes[i])
        };
        let mut map = number(mesh, basis.len(), info)?;
        map.pressure_per_cell = k.pow(dim as u32);
        Ok(map)
    }

    /// Numbers the DOFs of the Raviart-Thomas comparison element.
    pub fn new_rt(mesh: &Mesh, rt: &RtElement) -> Result<DofMap> {
        let dim = mesh.dim();
        let r = rt.r();
        let gl = crate::quadrature::gauss_lobatto_rule(r + 2)?.to_unit();
        let g = crate::quadrature::gauss_rule(r + 1)?.to_unit();
        let info = |a: usize| -> (Option<usize>, [Pos; 3], [f64; 3]) {
            let (j, idx) = rt.dof(a);
            let mut x = [0.0; 3];
            for ax in 0..dim {
                x[ax] = if ax == j { gl.points[idx[ax]] } else { g.points[idx[ax]] };
            }
            (rt.facet_of(a), rt.position(a), x)
        };
        let mut map = number(mesh, rt.len(), info)?;
        map.pressure_per_cell = (r + 1).pow(dim as u32);
        Ok(map)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_velocity(&self) -> usize {
        self.num_velocity
    }

    pub fn num_pressure(&self) -> usize {
        self.num_cells * self.pressure_per_cell
    }

    pub fn pressure_per_cell(&self) -> usize {
        self.pressure_per_cell
    }

    pub fn local_len(&self) -> usize {
        self.nloc
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    /// Number of local DOFs removed by Neumann constraints (counted per cell).
    pub fn num_constrained(&self) -> usize {
        self.num_constrained
    }

    pub fn cell_dofs(&self, c: usize) -> &[LocalDof] {
        &self.cell_dofs[c * self.nloc..(c + 1) * self.nloc]
    }

    pub fn kind(&self, dof: usize) -> DofKind {
        self.kinds[dof]
    }

    pub fn pressure_dof(&self, c: usize, q: usize) -> usize {
        c * self.pressure_per_cell + q
    }
}

fn number<F>(mesh: &Mesh, nloc: usize, info: F) -> Result<DofMap>
where
    F: Fn(usize) -> (Option<usize>, [Pos; 3], [f64; 3]),
{
    let dim = mesh.dim();
    let tol = 1e-10 * mesh.h();
    let local: Vec<_> = (0..nloc).map(&info).collect();
    let mut shared: HashMap<(usize, NodeKey), (usize, Located)> = HashMap::new();
    let mut cell_dofs = Vec::with_capacity(mesh.num_cells() * nloc);
    let mut kinds = Vec::new();
    let mut num_constrained = 0;
    for c in 0..mesh.num_cells() {
        let geom = mesh.geometry(c);
        for (lf, pos, xh) in &local {
            let Some(lf) = *lf else {
                let interior = pos[..dim].iter().all(|p| matches!(p, Pos::In { .. }));
                kinds.push(if interior {
                    DofKind::Interior
                } else {
                    DofKind::Tangential
                });
                cell_dofs.push(Some((kinds.len() - 1, 1.0)));
                continue;
            };
            let f = mesh.cell_facet(c, lf);
            let facet = &mesh.facets()[f];
            if facet.is_boundary() {
                if facet.tag == Some(BoundaryTag::Neumann) {
                    num_constrained += 1;
                    cell_dofs.push(None);
                } else {
                    kinds.push(DofKind::BoundaryNormal);
                    cell_dofs.push(Some((kinds.len() - 1, 1.0)));
                }
                continue;
            }
            let key = (f, mesh.point_key(c, pos));
            let side = |lf: usize| if lf % 2 == 1 { 1.0 } else { -1.0 };
            match shared.get(&key) {
                None => {
                    kinds.push(DofKind::SharedNormal);
                    let g = kinds.len() - 1;
                    shared.insert(key, (g, (c, lf, *xh)));
                    cell_dofs.push(Some((g, 1.0)));
                }
                Some(&(g, (oc, olf, oxh))) => {
                    let xo = mesh.geometry(oc).map(&oxh);
                    let xn = geom.map(xh);
                    if (xo - xn).norm() > tol {
                        return Err(MfmfeError::Topology(format!(
                            "facet DOF of cells {oc} and {c} on facet {f} at different points"
                        )));
                    }
                    let sigma = -side(olf) * side(lf);
                    cell_dofs.push(Some((g, sigma)));
                }
            }
        }
    }
    Ok(DofMap {
        dim,
        nloc,
        num_velocity: kinds.len(),
        pressure_per_cell: 0,
        num_cells: mesh.num_cells(),
        cell_dofs,
        kinds,
        num_constrained,
    })
}

/// Partition of the unconstrained velocity DOFs by global quadrature node.
#[derive(Debug, Clone)]
pub struct NodeBlocks {
    blocks: Vec<NodeBlock>,
    /// Block of each `(cell, local node)`, cell-major.
    node_block: Vec<usize>,
    nodes_per_cell: usize,
}

impl NodeBlocks {
    pub fn new(mesh: &Mesh, basis: &NodalBasis, dofs: &DofMap) -> NodeBlocks {
        let dim = mesh.dim();
        let k = basis.k();
        let nn = basis.num_nodes();
        let mut index: HashMap<NodeKey, usize> = HashMap::new();
        let mut blocks: Vec<NodeBlock> = Vec::new();
        let mut node_block = Vec::with_capacity(mesh.num_cells() * nn);
        for c in 0..mesh.num_cells() {
            let cd = dofs.cell_dofs(c);
            for i in 0..nn {
                let idx = basis.node_index(i);
                let mut pos = [Pos::Lo; 3];
                for (ax, p) in pos.iter_mut().enumerate().take(dim) {
                    *p = match idx[ax] {
                        0 => Pos::Lo,
                        t if t == k => Pos::Hi,
                        t => Pos::In { t, n: k + 1 },
                    };
                }
                let key = mesh.point_key(c, &pos);
                let b = *index.entry(key).or_insert_with(|| {
                    blocks.push(NodeBlock {
                        key,
                        dofs: Vec::new(),
                        members: Vec::new(),
                    });
                    blocks.len() - 1
                });
                blocks[b].members.push((c, i));
                for j in 0..dim {
                    if let Some((g, _)) = cd[i * dim + j] {
                        blocks[b].dofs.push(g);
                    }
                }
                node_block.push(b);
            }
        }
        for b in &mut blocks {
            b.dofs.sort_unstable();
            b.dofs.dedup();
        }
        NodeBlocks {
            blocks,
            node_block,
            nodes_per_cell: nn,
        }
    }

    pub fn blocks(&self) -> &[NodeBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, c: usize, node: usize) -> usize {
        self.node_block[c * self.nodes_per_cell + node]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{structured_mesh, BoundaryTag};

    fn setup(dim: usize, n: [usize; 3], k: usize) -> (Mesh, NodalBasis, DofMap) {
        let m = structured_mesh(dim, n, |x| x).unwrap();
        let b = NodalBasis::new(dim, k).unwrap();
        let d = DofMap::new(&m, &b).unwrap();
        (m, b, d)
    }

    #[test]
    fn single_cell_counts() {
        let (_, _, d) = setup(2, [1, 1, 1], 1);
        assert_eq!(d.num_velocity(), 8);
        assert_eq!(d.num_pressure(), 1);
        assert!((0..8).all(|g| d.kind(g) != DofKind::SharedNormal));
    }

    #[test]
    fn two_cells_share_two_normal_dofs() {
        let (_, _, d) = setup(2, [2, 1, 1], 1);
        assert_eq!(d.num_velocity(), 14);
        let shared = (0..14).filter(|&g| d.kind(g) == DofKind::SharedNormal).count();
        assert_eq!(shared, 2);
        // the neighbor sees the owner's x̂-component with σ = +1 (outward
        // normals are opposite, reference directions agree)
        let c1 = d.cell_dofs(1);
        assert_eq!(c1[0].unwrap().1, 1.0);
    }

    #[test]
    fn pressure_count() {
        let (_, _, d) = setup(2, [2, 2, 1], 2);
        assert_eq!(d.num_pressure(), 16);
    }

    #[test]
    fn total_count_formula() {
        // Σ d(k+1)^d minus interior facet GL nodes
        for (dim, n, k) in [(2, [3, 2, 1], 2), (3, [2, 2, 1], 1), (3, [2, 1, 2], 2)] {
            let (m, _, d) = setup(dim, n, k);
            let interior = m.facets().iter().filter(|f| !f.is_boundary()).count();
            let per_cell = dim * (k + 1).pow(dim as u32);
            let per_facet = (k + 1).pow(dim as u32 - 1);
            assert_eq!(d.num_velocity(), m.num_cells() * per_cell - interior * per_facet);
        }
    }

    #[test]
    fn neumann_dofs_are_removed() {
        let mut m = structured_mesh(2, [1, 1, 1], |x| x).unwrap();
        m.tag_boundary(|x| {
            if x[0] < 1e-12 {
                BoundaryTag::Neumann
            } else {
                BoundaryTag::Dirichlet
            }
        });
        let b = NodalBasis::new(2, 1).unwrap();
        let d = DofMap::new(&m, &b).unwrap();
        assert_eq!(d.num_velocity(), 6);
        assert_eq!(d.num_constrained(), 2);
    }

    #[test]
    fn block_sizes_2d() {
        let (m, b, d) = setup(2, [2, 2, 1], 1);
        let nb = NodeBlocks::new(&m, &b, &d);
        let center = nb.blocks().iter().find(|bl| bl.members.len() == 4).unwrap();
        assert_eq!(center.dofs.len(), 4);
        let (m, b, d) = setup(2, [1, 1, 1], 2);
        let nb = NodeBlocks::new(&m, &b, &d);
        let inner: Vec<_> = nb
            .blocks()
            .iter()
            .filter(|bl| matches!(bl.key, NodeKey::Interior { .. }))
            .collect();
        assert_eq!(inner.len(), 1);
        assert_eq!(inner[0].dofs.len(), 2);
    }

    #[test]
    fn block_sizes_3d() {
        let (m, b, d) = setup(3, [2, 2, 2], 1);
        let nb = NodeBlocks::new(&m, &b, &d);
        let center = nb.blocks().iter().find(|bl| bl.members.len() == 8).unwrap();
        assert_eq!(center.dofs.len(), 12);
    }

    #[test]
    fn blocks_partition_the_dofs() {
        let (m, b, d) = setup(3, [2, 1, 2], 2);
        let nb = NodeBlocks::new(&m, &b, &d);
        let mut all: Vec<usize> = nb.blocks().iter().flat_map(|bl| bl.dofs.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..d.num_velocity()).collect::<Vec<_>>());
    }

    #[test]
    fn rt_numbering() {
        let m = structured_mesh(2, [2, 1, 1], |x| x).unwrap();
        let rt = RtElement::new(2, 1).unwrap();
        let d = DofMap::new_rt(&m, &rt).unwrap();
        // 12 per cell, 2 shared on the interface
        assert_eq!(d.num_velocity(), 22);
        assert_eq!(d.num_pressure(), 8);
    }
}
