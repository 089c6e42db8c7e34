//! Conforming quadrilateral and hexahedral meshes.
//!
//! Cells store their `2^d` vertices in the reference corner order
//! `(0,0), (1,0), (1,1), (0,1)` in 2d and
//! `(0,0,0), (1,0,0), (1,1,0), (0,1,0), (0,0,1), (1,0,1), (1,1,1), (0,1,1)`
//! in 3d, on the reference cell `[0, 1]^d`. Local facet `2a + s` is the
//! facet `x_a = s`.

mod generators;
mod geometry;
pub mod io;
mod keys;
mod refine;
mod report;

use std::collections::HashMap;

pub use generators::{example1_mesh, example2_mesh, structured_mesh};
pub use geometry::{CellGeometry, MapPoint};
pub use keys::{FacetSymmetry, NodeKey, Pos};
pub use refine::refine_uniform;
pub use report::{geometry_report, GeometryReport};

use crate::error::{MfmfeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

/// A facet seen from one of its cells: `(cell, local facet id)`.
pub type FacetSide = (usize, usize);

#[derive(Debug, Clone)]
pub struct Facet {
    pub owner: FacetSide,
    pub neighbor: Option<FacetSide>,
    pub tag: Option<BoundaryTag>,
    /// Maps owner facet-local coordinates to neighbor facet-local
    /// coordinates; identity on boundary facets.
    pub orientation: FacetSymmetry,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    cells: Vec<[usize; 8]>,
    facets: Vec<Facet>,
    cell_facets: Vec<[usize; 6]>,
    nominal_h: Option<f64>,
}

/// Reference coordinates (bits) of a cell corner in the standard order.
pub fn corner_bits(corner: usize) -> [usize; 3] {
    const BITS: [[usize; 3]; 8] = [
        [0, 0, 0],
        [1, 0, 0],
        [1, 1, 0],
        [0, 1, 0],
        [0, 0, 1],
        [1, 0, 1],
        [1, 1, 1],
        [0, 1, 1],
    ];
    BITS[corner]
}

pub fn corner_of_bits(bits: [usize; 3]) -> usize {
    let base = match (bits[0], bits[1]) {
        (0, 0) => 0,
        (1, 0) => 1,
        (1, 1) => 2,
        _ => 3,
    };
    base + 4 * bits[2]
}

/// Axes spanning local facet `lf`, in increasing order.
pub fn facet_axes(dim: usize, lf: usize) -> ([usize; 2], usize) {
    let normal = lf / 2;
    let mut axes = [0; 2];
    let mut n = 0;
    for a in (0..dim).filter(|&a| a != normal) {
        axes[n] = a;
        n += 1;
    }
    (axes, n)
}

/// Local corner of facet `lf` at facet-local corner `(bu, bw)`.
pub fn facet_corner(dim: usize, lf: usize, bu: usize, bw: usize) -> usize {
    let (axes, n) = facet_axes(dim, lf);
    let mut bits = [0; 3];
    bits[lf / 2] = lf % 2;
    bits[axes[0]] = bu;
    if n > 1 {
        bits[axes[1]] = bw;
    }
    corner_of_bits(bits)
}

impl Mesh {
    /// Builds a mesh and its facet topology. Every boundary facet starts
    /// out tagged Dirichlet.
    pub fn new(dim: usize, vertices: Vec<[f64; 3]>, cells: Vec<[usize; 8]>) -> Result<Mesh> {
        if !(2..=3).contains(&dim) {
            return Err(MfmfeError::InvalidArgument(format!(
                "mesh dimension must be 2 or 3, got {dim}"
            )));
        }
        let nc = 1 << dim;
        for (c, cell) in cells.iter().enumerate() {
            if let Some(&v) = cell[..nc].iter().find(|&&v| v >= vertices.len()) {
                return Err(MfmfeError::Topology(format!(
                    "cell {c} references vertex {v} out of range"
                )));
            }
        }
        let mut mesh = Mesh {
            dim,
            vertices,
            cells,
            facets: Vec::new(),
            cell_facets: Vec::new(),
            nominal_h: None,
        };
        mesh.build_topology()?;
        Ok(mesh)
    }

    fn build_topology(&mut self) -> Result<()> {
        let nf = 2 * self.dim;
        let mut lookup: HashMap<[usize; 4], usize> = HashMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut cell_facets = vec![[usize::MAX; 6]; self.cells.len()];
        for c in 0..self.cells.len() {
            for lf in 0..nf {
                let key = self.facet_key(c, lf);
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, facets.len());
                        cell_facets[c][lf] = facets.len();
                        facets.push(Facet {
                            owner: (c, lf),
                            neighbor: None,
                            tag: Some(BoundaryTag::Dirichlet),
                            orientation: FacetSymmetry::IDENTITY,
                        });
                    }
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.neighbor.is_some() || facet.owner.0 == c {
                            return Err(MfmfeError::Topology(format!(
                                "facet {key:?} is shared by more than two cells"
                            )));
                        }
                        facet.neighbor = Some((c, lf));
                        facet.tag = None;
                        cell_facets[c][lf] = f;
                    }
                }
            }
        }
        for facet in facets.iter_mut() {
            if let Some(nb) = facet.neighbor {
                facet.orientation = self.match_facets(facet.owner, nb)?;
            }
        }
        self.facets = facets;
        self.cell_facets = cell_facets;
        Ok(())
    }

    fn facet_key(&self, c: usize, lf: usize) -> [usize; 4] {
        let mut key = [usize::MAX; 4];
        let m = 1 << (self.dim - 1);
        for (i, k) in key.iter_mut().enumerate().take(m) {
            *k = self.cells[c][facet_corner(self.dim, lf, i % 2, i / 2)];
        }
        key[..m].sort_unstable();
        key
    }

    /// Global vertex of facet-local corner `(bu, bw)` of `(cell, lf)`.
    pub fn facet_vertex(&self, side: FacetSide, bu: usize, bw: usize) -> usize {
        self.cells[side.0][facet_corner(self.dim, side.1, bu, bw)]
    }

    fn match_facets(&self, owner: FacetSide, nb: FacetSide) -> Result<FacetSymmetry> {
        let fdim = self.dim - 1;
        for sym in FacetSymmetry::all(fdim) {
            let ok = (0..(1 << fdim)).all(|i| {
                let (bu, bw) = (i % 2, i / 2);
                let (nu, nw) = sym.apply_corner(bu, bw);
                self.facet_vertex(owner, bu, bw) == self.facet_vertex(nb, nu, nw)
            });
            if ok {
                return Ok(sym);
            }
        }
        Err(MfmfeError::Topology(format!(
            "facets {owner:?} and {nb:?} share vertices but do not match"
        )))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    /// Vertex ids of cell `c`; only the first `2^d` entries are meaningful.
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c][..1 << self.dim]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.cells.iter().map(move |c| &c[..1 << self.dim])
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn cell_facet(&self, c: usize, lf: usize) -> usize {
        self.cell_facets[c][lf]
    }

    /// The facet on the other side of `(c, lf)`, if interior.
    pub fn opposite(&self, c: usize, lf: usize) -> Option<FacetSide> {
        let f = &self.facets[self.cell_facets[c][lf]];
        if f.owner == (c, lf) {
            f.neighbor
        } else {
            Some(f.owner)
        }
    }

    pub fn geometry(&self, c: usize) -> CellGeometry {
        let mut corners = [[0.0; 3]; 8];
        for (i, &v) in self.cell(c).iter().enumerate() {
            corners[i] = self.vertices[v];
        }
        CellGeometry::new(c, self.dim, corners)
    }

    pub fn set_boundary_tag(&mut self, facet: usize, tag: BoundaryTag) -> Result<()> {
        let f = &mut self.facets[facet];
        if !f.is_boundary() {
            return Err(MfmfeError::InvalidArgument(format!(
                "facet {facet} is interior and cannot carry a boundary tag"
            )));
        }
        f.tag = Some(tag);
        Ok(())
    }

    /// Retags boundary facets by their centroid.
    pub fn tag_boundary<F: Fn(&[f64; 3]) -> BoundaryTag>(&mut self, tagger: F) {
        for f in 0..self.facets.len() {
            if self.facets[f].is_boundary() {
                let (c, lf) = self.facets[f].owner;
                let m = 1 << (self.dim - 1);
                let mut x = [0.0; 3];
                for i in 0..m {
                    let v = self.vertices[self.facet_vertex((c, lf), i % 2, i / 2)];
                    for a in 0..3 {
                        x[a] += v[a] / m as f64;
                    }
                }
                self.facets[f].tag = Some(tagger(&x));
            }
        }
    }

    pub fn has_dirichlet_boundary(&self) -> bool {
        self.facets.iter().any(|f| f.tag == Some(BoundaryTag::Dirichlet))
    }

    /// Largest cell diameter (maximum vertex-to-vertex distance).
    pub fn h(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| {
                let vs = self.cell(c);
                let mut d: f64 = 0.0;
                for i in 0..vs.len() {
                    for j in i + 1..vs.len() {
                        let (a, b) = (self.vertices[vs[i]], self.vertices[vs[j]]);
                        let s: f64 = (0..3).map(|k| (a[k] - b[k]).powi(2)).sum();
                        d = d.max(s.sqrt());
                    }
                }
                d
            })
            .fold(0.0, f64::max)
    }

    /// Nominal mesh size of generated meshes, falling back to [`Mesh::h`].
    pub fn nominal_h(&self) -> f64 {
        self.nominal_h.unwrap_or_else(|| self.h())
    }

    pub fn with_nominal_h(mut self, h: f64) -> Mesh {
        self.nominal_h = Some(h);
        self
    }

    /// Canonical identity of a point of cell `c` given by per-axis positions.
    pub fn point_key(&self, c: usize, pos: &[Pos; 3]) -> NodeKey {
        keys::point_key(self, c, pos)
    }

    /// Cells incident to every vertex.
    pub fn vertex_cells(&self) -> Vec<Vec<usize>> {
        let mut vc = vec![Vec::new(); self.vertices.len()];
        for c in 0..self.num_cells() {
            for &v in self.cell(c) {
                vc[v].push(c);
            }
        }
        vc
    }

    /// Fails if the Jacobian determinant is not positive at every given
    /// reference point of every cell.
    pub fn check_jacobians(&self, points: &[[f64; 3]]) -> Result<()> {
        for c in 0..self.num_cells() {
            let g = self.geometry(c);
            for x in points {
                g.map_point(x)?;
            }
        }
        Ok(())
    }
}
