use std::f64::consts::PI;

use super::{corner_bits, refine_uniform, Mesh};
use crate::error::Result;

/// Tensor grid of `n[0] x n[1] (x n[2])` cells on the unit square/cube with
/// every vertex passed through `map`.
pub fn structured_mesh<F>(dim: usize, n: [usize; 3], map: F) -> Result<Mesh>
where
    F: Fn([f64; 3]) -> [f64; 3],
{
    let nz = if dim == 3 { n[2] } else { 0 };
    let (vx, vy, vz) = (n[0] + 1, n[1] + 1, nz + 1);
    let id = |i: usize, j: usize, k: usize| (k * vy + j) * vx + i;
    let mut vertices = Vec::with_capacity(vx * vy * vz);
    for k in 0..vz {
        for j in 0..vy {
            for i in 0..vx {
                let z = if dim == 3 { k as f64 / nz as f64 } else { 0.0 };
                vertices.push(map([i as f64 / n[0] as f64, j as f64 / n[1] as f64, z]));
            }
        }
    }
    let mut cells = Vec::new();
    for k in 0..nz.max(1) {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let mut cell = [0usize; 8];
                for (c, slot) in cell.iter_mut().enumerate().take(1 << dim) {
                    let b = corner_bits(c);
                    *slot = id(i + b[0], j + b[1], if dim == 3 { k + b[2] } else { 0 });
                }
                cells.push(cell);
            }
        }
    }
    Mesh::new(dim, vertices, cells)
}

fn refine_times(mut mesh: Mesh, level: usize) -> Mesh {
    for _ in 0..level {
        mesh = refine_uniform(&mesh);
    }
    mesh
}

/// Distorted 3x3 quadrilateral mesh of the unit square, refined `level`
/// times. Interior vertices move by `(0.03, -0.04) cos(3πx) cos(3πy)`;
/// boundary vertices stay put so the domain remains the unit square.
pub fn example1_mesh(level: usize) -> Mesh {
    let coarse = structured_mesh(2, [3, 3, 1], |[x, y, z]| {
        let interior = x > 1e-12 && x < 1.0 - 1e-12 && y > 1e-12 && y < 1.0 - 1e-12;
        if interior {
            let s = (3.0 * PI * x).cos() * (3.0 * PI * y).cos();
            [x + 0.03 * s, y - 0.04 * s, z]
        } else {
            [x, y, z]
        }
    })
    .expect("coarse grid is valid")
    .with_nominal_h(1.0 / 3.0);
    refine_times(coarse, level)
}

/// Smooth map of a 4x4x4 unit-cube grid, refined `level` times.
pub fn example2_mesh(level: usize) -> Mesh {
    let coarse = structured_mesh(3, [4, 4, 4], |[x, y, z]| {
        let s = (3.0 * PI * x).cos() * (3.0 * PI * y).cos() * (3.0 * PI * z).cos();
        [x + 0.03 * s, y - 0.04 * s, z + 0.05 * s]
    })
    .expect("coarse grid is valid")
    .with_nominal_h(0.25);
    refine_times(coarse, level)
}
