//! Bilinear and trilinear reference-to-physical maps on `[0,1]^d`.
//!
//! In 2d all vectors and matrices are embedded in 3d with an identity third
//! row/column, so `det DF` is the 2d determinant and 2d velocities carry a
//! zero third component.

use nalgebra::{Matrix3, Vector3};

use crate::error::{MfmfeError, Result};

#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub cell: usize,
    pub dim: usize,
    /// Corners `r_1 .. r_{2^d}` in reference order.
    pub corners: [Vector3<f64>; 8],
}

/// Mapping data at a single reference point.
#[derive(Debug, Clone, Copy)]
pub struct MapPoint {
    pub x: Vector3<f64>,
    pub df: Matrix3<f64>,
    pub df_inv: Matrix3<f64>,
    pub jac: f64,
}

impl MapPoint {
    /// Contravariant Piola image `(1/J) DF v̂` of a reference vector.
    pub fn piola(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.df * v / self.jac
    }

    /// Physical gradient `DF^{-T} ∇̂φ` of a reference gradient.
    pub fn grad(&self, g: &Vector3<f64>) -> Vector3<f64> {
        self.df_inv.transpose() * g
    }

    /// Facet scaling `J_e = |J DF^{-T} n̂|` for a reference normal.
    pub fn facet_jacobian(&self, n_hat: &Vector3<f64>) -> f64 {
        (self.jac * self.df_inv.transpose() * n_hat).norm()
    }
}

impl CellGeometry {
    pub fn new(cell: usize, dim: usize, corners: [[f64; 3]; 8]) -> CellGeometry {
        CellGeometry {
            cell,
            dim,
            corners: corners.map(Vector3::from),
        }
    }

    fn r(&self, i: usize) -> Vector3<f64> {
        self.corners[i - 1]
    }

    fn rr(&self, i: usize, j: usize) -> Vector3<f64> {
        self.r(i) - self.r(j)
    }

    /// `F_E(x̂)` and `DF_E(x̂)` from the multilinear corner formulas.
    pub fn map_with_jacobian(&self, xh: &[f64; 3]) -> (Vector3<f64>, Matrix3<f64>) {
        let (x, y, z) = (xh[0], xh[1], xh[2]);
        let r21 = self.rr(2, 1);
        let r41 = self.rr(4, 1);
        let r34_21 = self.rr(3, 4) - r21;
        if self.dim == 2 {
            let p = self.r(1) + r21 * x + r41 * y + r34_21 * (x * y);
            let dx = r21 + r34_21 * y;
            let dy = r41 + r34_21 * x;
            let df = Matrix3::new(dx[0], dy[0], 0.0, dx[1], dy[1], 0.0, 0.0, 0.0, 1.0);
            (Vector3::new(p[0], p[1], 0.0), df)
        } else {
            let r51 = self.rr(5, 1);
            let r65_21 = self.rr(6, 5) - r21;
            let r85_41 = self.rr(8, 5) - r41;
            let rxyz = (r21 - self.rr(3, 4)) - (self.rr(6, 5) - self.rr(7, 8));
            let p = self.r(1)
                + r21 * x
                + r41 * y
                + r51 * z
                + r34_21 * (x * y)
                + r65_21 * (x * z)
                + r85_41 * (y * z)
                + rxyz * (x * y * z);
            let dx = r21 + r34_21 * y + r65_21 * z + rxyz * (y * z);
            let dy = r41 + r34_21 * x + r85_41 * z + rxyz * (x * z);
            let dz = r51 + r65_21 * x + r85_41 * y + rxyz * (x * y);
            let df = Matrix3::from_columns(&[dx, dy, dz]);
            (p, df)
        }
    }

    pub fn map(&self, xh: &[f64; 3]) -> Vector3<f64> {
        self.map_with_jacobian(xh).0
    }

    /// Physical point, Jacobian matrix, its inverse and `J = det DF`.
    /// Fails when `J <= 0`.
    pub fn map_point(&self, xh: &[f64; 3]) -> Result<MapPoint> {
        let (x, df) = self.map_with_jacobian(xh);
        let jac = df.determinant();
        if jac.is_nan() || jac <= 0.0 {
            return Err(MfmfeError::Geometry {
                cell: self.cell,
                reason: format!("Jacobian determinant {jac:e} at reference point {xh:?}"),
            });
        }
        let df_inv = df.try_inverse().ok_or_else(|| MfmfeError::Geometry {
            cell: self.cell,
            reason: "singular Jacobian".into(),
        })?;
        Ok(MapPoint { x, df, df_inv, jac })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(c: [[f64; 2]; 4]) -> CellGeometry {
        let mut corners = [[0.0; 3]; 8];
        for i in 0..4 {
            corners[i] = [c[i][0], c[i][1], 0.0];
        }
        CellGeometry::new(0, 2, corners)
    }

    #[test]
    fn reference_cell_is_identity() {
        let g = quad([[0., 0.], [1., 0.], [1., 1.], [0., 1.]]);
        let mp = g.map_point(&[0.3, 0.7, 0.0]).unwrap();
        assert!((mp.x - Vector3::new(0.3, 0.7, 0.0)).norm() < 1e-15);
        assert!((mp.df - Matrix3::identity()).norm() < 1e-15);
        assert_eq!(mp.jac, 1.0);
    }

    #[test]
    fn parallelogram_is_affine() {
        let h = 0.25;
        let g = quad([[1., 1.], [1. + h, 1.], [1. + h, 1. + h], [1., 1. + h]]);
        let mp = g.map_point(&[0.1, 0.9, 0.0]).unwrap();
        let mut expect = Matrix3::identity() * h;
        expect[(2, 2)] = 1.0;
        assert!((mp.df - expect).norm() < 1e-15);
        assert!((mp.jac - h * h).abs() < 1e-15);
    }

    #[test]
    fn bilinear_jacobian_matches_finite_differences() {
        let g = quad([[0., 0.], [1., 0.], [1.2, 1.1], [0., 1.]]);
        let xh = [0.5, 0.5, 0.0];
        let mp = g.map_point(&xh).unwrap();
        let step = 1e-6;
        let mut fd = Matrix3::identity();
        for a in 0..2 {
            let mut p = xh;
            let mut m = xh;
            p[a] += step;
            m[a] -= step;
            let col = (g.map(&p) - g.map(&m)) / (2.0 * step);
            for r in 0..2 {
                fd[(r, a)] = col[r];
            }
        }
        let j_fd = fd.determinant();
        // DF = [[1 + 0.2 y, 0.2 x], [0.1 y, 1 + 0.1 x]] at (1/2, 1/2)
        assert!((mp.jac - (1.1 * 1.05 - 0.1 * 0.05)).abs() < 1e-14);
        assert!((j_fd - mp.jac).abs() < 1e-8);
        assert!((fd - mp.df).norm() < 1e-8);
    }

    #[test]
    fn degenerate_cell_rejected() {
        // bow-tie: corners 3 and 4 swapped
        let g = quad([[0., 0.], [1., 0.], [0., 1.], [1., 1.]]);
        let err = g.map_point(&[0.9, 0.9, 0.0]).unwrap_err();
        assert!(matches!(err, MfmfeError::Geometry { cell: 0, .. }));
    }

    #[test]
    fn trilinear_interpolates_corners() {
        let mut corners = [[0.0; 3]; 8];
        for (i, c) in corners.iter_mut().enumerate() {
            let b = crate::mesh::corner_bits(i);
            *c = [
                b[0] as f64 + 0.1 * (i as f64).sin(),
                b[1] as f64 + 0.1 * (i as f64).cos(),
                b[2] as f64 + 0.05 * i as f64,
            ];
        }
        let g = CellGeometry::new(0, 3, corners);
        for (i, c) in corners.iter().enumerate() {
            let b = crate::mesh::corner_bits(i);
            let x = g.map(&[b[0] as f64, b[1] as f64, b[2] as f64]);
            assert!((x - Vector3::from(*c)).norm() < 1e-14);
        }
        let mp = g.map_point(&[0.2, 0.4, 0.6]).unwrap();
        assert!((mp.df * mp.df_inv - Matrix3::identity()).norm() < 1e-12);
    }
}
