use std::collections::HashMap;

use super::{corner_bits, corner_of_bits, Mesh};

/// Splits every cell into `2^d` children through the images of the edge
/// midpoints, facet centers and cell center. For multilinear cells the
/// children reproduce the parent map exactly. Boundary tags are inherited.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let dim = mesh.dim();
    let nc = 1 << dim;
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut lookup: HashMap<[usize; 8], usize> = HashMap::new();
    let mut cells = Vec::with_capacity(mesh.num_cells() * nc);
    let mut parent_of = Vec::with_capacity(mesh.num_cells() * nc);

    for c in 0..mesh.num_cells() {
        let parent = mesh.cell(c);
        // vertex at half-integer reference coordinates h/2, h in {0,1,2}^d
        let mut vertex_at = |h: [usize; 3]| -> usize {
            let free: Vec<usize> = (0..dim).filter(|&a| h[a] == 1).collect();
            let mut ids = Vec::with_capacity(1 << free.len());
            for m in 0..(1usize << free.len()) {
                let mut bits = [0; 3];
                for a in 0..dim {
                    bits[a] = h[a] / 2;
                }
                for (j, &a) in free.iter().enumerate() {
                    bits[a] = (m >> j) & 1;
                }
                ids.push(parent[corner_of_bits(bits)]);
            }
            let mut key = [usize::MAX; 8];
            key[..ids.len()].copy_from_slice(&ids);
            key[..ids.len()].sort_unstable();
            *lookup.entry(key).or_insert_with(|| {
                let mut x = [0.0; 3];
                for &v in &ids {
                    for (xa, va) in x.iter_mut().zip(mesh.vertices()[v]) {
                        *xa += va / ids.len() as f64;
                    }
                }
                vertices.push(x);
                vertices.len() - 1
            })
        };
        for child in 0..nc {
            let cb = corner_bits(child);
            let mut cell = [0usize; 8];
            for (i, slot) in cell.iter_mut().enumerate().take(nc) {
                let b = corner_bits(i);
                let mut h = [0; 3];
                for a in 0..dim {
                    h[a] = cb[a] + b[a];
                }
                *slot = vertex_at(h);
            }
            cells.push(cell);
            parent_of.push((c, cb));
        }
    }

    let mut fine = Mesh::new(dim, vertices, cells).expect("refinement of a valid mesh is valid");
    for (child, &(c, cb)) in parent_of.iter().enumerate() {
        for lf in 0..2 * dim {
            let (axis, side) = (lf / 2, lf % 2);
            if cb[axis] != side {
                continue;
            }
            let pf = &mesh.facets()[mesh.cell_facet(c, lf)];
            if let Some(tag) = pf.tag {
                let f = fine.cell_facet(child, lf);
                fine.set_boundary_tag(f, tag)
                    .expect("child of a boundary facet lies on the boundary");
            }
        }
    }
    if let Some(h) = mesh.nominal_h {
        fine.nominal_h = Some(h / 2.0);
    }
    fine
}
