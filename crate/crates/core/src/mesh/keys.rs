//! Orientation-free identities for points on shared mesh entities.

use super::{corner_of_bits, Mesh};

/// Symmetry of the reference facet `[0,1]^{d-1}`: an optional swap of the
/// two facet axes followed by optional reflections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FacetSymmetry {
    pub swap: bool,
    pub flip_u: bool,
    pub flip_w: bool,
}

impl FacetSymmetry {
    pub const IDENTITY: FacetSymmetry = FacetSymmetry {
        swap: false,
        flip_u: false,
        flip_w: false,
    };

    /// All symmetries of a facet of dimension `fdim` (1 or 2).
    pub fn all(fdim: usize) -> Vec<FacetSymmetry> {
        let mut out = Vec::new();
        for code in 0..8u8 {
            let s = FacetSymmetry {
                swap: code & 1 != 0,
                flip_u: code & 2 != 0,
                flip_w: code & 4 != 0,
            };
            if fdim == 1 && (s.swap || s.flip_w) {
                continue;
            }
            out.push(s);
        }
        out
    }

    fn apply_with(&self, u: f64, w: f64, top: f64) -> (f64, f64) {
        let (a, b) = if self.swap { (w, u) } else { (u, w) };
        (
            if self.flip_u { top - a } else { a },
            if self.flip_w { top - b } else { b },
        )
    }

    pub fn apply(&self, u: f64, w: f64) -> (f64, f64) {
        self.apply_with(u, w, 1.0)
    }

    pub fn apply_corner(&self, bu: usize, bw: usize) -> (usize, usize) {
        let (a, b) = self.apply_with(bu as f64, bw as f64, 1.0);
        (a as usize, b as usize)
    }

    /// Action on indices of a symmetric `n`-point rule along each axis.
    pub fn apply_index(&self, tu: usize, tw: usize, n: usize) -> (usize, usize) {
        let (a, b) = if self.swap { (tw, tu) } else { (tu, tw) };
        (
            if self.flip_u { n - 1 - a } else { a },
            if self.flip_w { n - 1 - b } else { b },
        )
    }
}

/// Position of a point along one reference axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pos {
    Lo,
    Hi,
    /// Index `t` of a symmetric `n`-point rule, strictly inside the interval.
    In {
        t: usize,
        n: usize,
    },
}

/// Canonical identity of a point on a vertex, edge, face or cell interior.
/// Two cells produce the same key exactly when the point is shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey {
    Vertex(usize),
    Edge { verts: [usize; 2], t: usize },
    Face { verts: [usize; 4], t: [usize; 2] },
    Interior { cell: usize, t: [usize; 3] },
}

impl NodeKey {
    /// Dimension of the entity carrying the point.
    pub fn entity_dim(&self) -> usize {
        match self {
            NodeKey::Vertex(_) => 0,
            NodeKey::Edge { .. } => 1,
            NodeKey::Face { .. } => 2,
            NodeKey::Interior { .. } => 3,
        }
    }
}

pub(super) fn point_key(mesh: &Mesh, c: usize, pos: &[Pos; 3]) -> NodeKey {
    let dim = mesh.dim();
    let cell = mesh.cell(c);
    let mut bits = [0usize; 3];
    let mut free = Vec::with_capacity(3);
    for a in 0..dim {
        match pos[a] {
            Pos::Lo => bits[a] = 0,
            Pos::Hi => bits[a] = 1,
            Pos::In { t, n } => free.push((a, t, n)),
        }
    }
    let vertex = |bits: [usize; 3]| cell[corner_of_bits(bits)];
    match free.len() {
        0 => NodeKey::Vertex(vertex(bits)),
        l if l == dim => {
            let mut t = [0; 3];
            for &(a, ta, _) in &free {
                t[a] = ta;
            }
            NodeKey::Interior { cell: c, t }
        }
        1 => {
            let (a, t, n) = free[0];
            let mut b0 = bits;
            b0[a] = 0;
            let mut b1 = bits;
            b1[a] = 1;
            let (g0, g1) = (vertex(b0), vertex(b1));
            if g0 < g1 {
                NodeKey::Edge { verts: [g0, g1], t }
            } else {
                NodeKey::Edge {
                    verts: [g1, g0],
                    t: n - 1 - t,
                }
            }
        }
        _ => {
            let (au, tu, n) = free[0];
            let (aw, tw, _) = free[1];
            let g = |bu: usize, bw: usize| {
                let mut b = bits;
                b[au] = bu;
                b[aw] = bw;
                vertex(b)
            };
            for sym in FacetSymmetry::all(2) {
                let mut h = [[0usize; 2]; 2];
                for bu in 0..2 {
                    for bw in 0..2 {
                        let (u2, w2) = sym.apply_corner(bu, bw);
                        h[u2][w2] = g(bu, bw);
                    }
                }
                let min = h.iter().flatten().copied().min().unwrap_or(0);
                if h[0][0] == min && h[1][0] < h[0][1] {
                    let (su, sw) = sym.apply_index(tu, tw, n);
                    return NodeKey::Face {
                        verts: [h[0][0], h[1][0], h[0][1], h[1][1]],
                        t: [su, sw],
                    };
                }
            }
            unreachable!("a quadrilateral face always has a canonical orientation")
        }
    }
}
