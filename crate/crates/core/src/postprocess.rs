//! Discrete field evaluation and local pressure postprocessing.

use nalgebra::{Cholesky, DMatrix, DVector, Vector3};
use rayon::prelude::*;

use crate::assembly::{permeability_inverse, CoefficientField};
use crate::dofmap::DofMap;
use crate::error::{MfmfeError, Result};
use crate::mesh::{MapPoint, Mesh};
use crate::quadrature::{gauss_rule, legendre, multi_index, tensor_rule};
use crate::refbasis::{BasisTable, PressureBasis, VelocityElement};

/// Signed local velocity coefficients of cell `c`; removed DOFs are zero.
pub fn local_velocity(dofs: &DofMap, c: usize, u: &[f64]) -> Vec<f64> {
    dofs.cell_dofs(c)
        .iter()
        .map(|d| d.map_or(0.0, |(g, s)| s * u[g]))
        .collect()
}

/// Physical velocity and divergence at tabulated point `p` of a cell.
pub fn velocity_at(table: &BasisTable, p: usize, coef: &[f64], mp: &MapPoint) -> (Vector3<f64>, f64) {
    let mut v = Vector3::zeros();
    let mut div = 0.0;
    for (a, &ca) in coef.iter().enumerate() {
        v += table.value(p, a) * ca;
        div += table.divergence(p, a) * ca;
    }
    (mp.piola(&v), div / mp.jac)
}

/// Shifted Legendre tensor basis of `Q^deg` on `[0,1]^d`; index 0 is the
/// constant. Returns values and reference gradients.
fn legendre_q(dim: usize, deg: usize, xh: &[f64; 3]) -> (Vec<f64>, Vec<Vector3<f64>>) {
    let n = deg + 1;
    let tab: Vec<Vec<(f64, f64)>> = (0..dim)
        .map(|a| (0..n).map(|m| legendre(m, 2.0 * xh[a] - 1.0)).collect())
        .collect();
    let len = n.pow(dim as u32);
    let mut vals = Vec::with_capacity(len);
    let mut grads = Vec::with_capacity(len);
    for i in 0..len {
        let idx = multi_index(dim, n, i);
        let mut v = 1.0;
        let mut g = Vector3::zeros();
        for a in 0..dim {
            v *= tab[a][idx[a]].0;
        }
        for b in 0..dim {
            let mut gb = 2.0 * tab[b][idx[b]].1;
            for a in (0..dim).filter(|&a| a != b) {
                gb *= tab[a][idx[a]].0;
            }
            g[b] = gb;
        }
        vals.push(v);
        grads.push(g);
    }
    (vals, grads)
}

/// Elementwise `Q^k` pressure with the cell means of `p_h` and gradient
/// matched to `-K⁻¹ u_h`.
#[derive(Debug, Clone)]
pub struct PostprocessedPressure {
    dim: usize,
    deg: usize,
    coeffs: Vec<Vec<f64>>,
}

impl PostprocessedPressure {
    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn cell_coefficients(&self, c: usize) -> &[f64] {
        &self.coeffs[c]
    }

    /// Value on cell `c` at reference point `xh`.
    pub fn eval(&self, c: usize, xh: &[f64; 3]) -> f64 {
        let (v, _) = legendre_q(self.dim, self.deg, xh);
        v.iter().zip(&self.coeffs[c]).map(|(a, b)| a * b).sum()
    }
}

/// Solves `(∇p*, ∇q)_E = -(K⁻¹u_h, ∇q)_E` on the non-constant part of
/// `Q^k` per cell, then fixes the constant so the cell mean matches `p_h`.
/// `k` is the number of pressure points per axis and `nq` the number of
/// Gauss points per axis.
#[allow(clippy::too_many_arguments)]
pub fn postprocess<E, C>(
    mesh: &Mesh,
    dofs: &DofMap,
    elem: &E,
    pressure: &PressureBasis,
    u: &[f64],
    p: &[f64],
    coeff: &C,
    nq: usize,
) -> Result<PostprocessedPressure>
where
    E: VelocityElement + ?Sized,
    C: CoefficientField + ?Sized,
{
    let dim = mesh.dim();
    let deg = pressure.k();
    let rule = tensor_rule(&gauss_rule(nq)?.to_unit(), dim)?;
    let vt = elem.tabulate(&rule.nodes);
    let pt = pressure.tabulate(&rule.nodes);
    let basis: Vec<_> = rule.nodes.iter().map(|x| legendre_q(dim, deg, x)).collect();
    let npb = pressure.len();
    let nb = (deg + 1).pow(dim as u32);

    let coeffs: Result<Vec<Vec<f64>>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.geometry(c);
            let coef = local_velocity(dofs, c, u);
            let mut m = DMatrix::zeros(nb - 1, nb - 1);
            let mut rhs = DVector::zeros(nb - 1);
            let mut mean_ph = 0.0;
            let mut mean_phi = vec![0.0; nb];
            for (q, (xh, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                let mp = geom.map_point(xh)?;
                let wj = w * mp.jac;
                let (uh, _) = velocity_at(&vt, q, &coef, &mp);
                let kinv = permeability_inverse(&coeff.permeability(&mp.x), dim)?;
                let flux = kinv * uh;
                let (vals, grads) = &basis[q];
                let pg: Vec<Vector3<f64>> = grads.iter().skip(1).map(|g| mp.grad(g)).collect();
                for i in 0..nb - 1 {
                    rhs[i] -= wj * flux.dot(&pg[i]);
                    for j in 0..nb - 1 {
                        m[(i, j)] += wj * pg[i].dot(&pg[j]);
                    }
                }
                let ph: f64 = (0..npb).map(|a| pt[q * npb + a] * p[dofs.pressure_dof(c, a)]).sum();
                mean_ph += wj * ph;
                for (mi, v) in mean_phi.iter_mut().zip(vals) {
                    *mi += wj * v;
                }
            }
            let sol = Cholesky::new(m)
                .ok_or_else(|| MfmfeError::Geometry {
                    cell: c,
                    reason: "singular postprocessing system".into(),
                })?
                .solve(&rhs);
            let mut out = vec![0.0; nb];
            out[1..].copy_from_slice(sol.as_slice());
            let rest: f64 = (1..nb).map(|i| out[i] * mean_phi[i]).sum();
            out[0] = (mean_ph - rest) / mean_phi[0];
            Ok(out)
        })
        .collect();
    Ok(PostprocessedPressure {
        dim,
        deg,
        coeffs: coeffs?,
    })
}
