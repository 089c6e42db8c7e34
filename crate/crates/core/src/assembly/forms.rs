use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;

use super::{mapped_permeability_inverse, CoefficientField};
use crate::dofmap::DofMap;
use crate::error::Result;
use crate::mesh::{facet_axes, BoundaryTag, FacetSide, Mesh};
use crate::quadrature::{gauss_rule, legendre, tensor_rule, Rule1D};
use crate::refbasis::{PressureBasis, VelocityElement};
use crate::sparse::CsrMatrix;

/// Reference point of facet `lf` at facet-local coordinates `(u, w)`.
pub(crate) fn facet_point(dim: usize, lf: usize, u: f64, w: f64) -> [f64; 3] {
    let (axes, n) = facet_axes(dim, lf);
    let mut x = [0.0; 3];
    x[lf / 2] = (lf % 2) as f64;
    x[axes[0]] = u;
    if n > 1 {
        x[axes[1]] = w;
    }
    x
}

/// Tensor Gauss rule on the reference facet: `((u, w), weight)`.
pub(crate) fn facet_rule(dim: usize, rule: &Rule1D) -> Vec<([f64; 2], f64)> {
    let n = rule.len();
    if dim == 2 {
        (0..n).map(|i| ([rule.points[i], 0.0], rule.weights[i])).collect()
    } else {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(([rule.points[i], rule.points[j]], rule.weights[i] * rule.weights[j]));
            }
        }
        out
    }
}

/// `L²(ê)` projection of `g ∘ F_E` onto `Q^{k-1}` on a reference facet,
/// stored as shifted-Legendre coefficients.
#[derive(Debug, Clone)]
pub struct FacetProjection {
    pub facet: usize,
    pub side: FacetSide,
    pub dim: usize,
    pub k: usize,
    pub coeffs: Vec<f64>,
}

impl FacetProjection {
    fn index(&self, e: usize) -> [usize; 2] {
        if self.dim == 2 {
            [e, 0]
        } else {
            [e / self.k, e % self.k]
        }
    }

    fn basis(&self, e: usize, uw: [f64; 2]) -> f64 {
        let [a, b] = self.index(e);
        let mut v = legendre(a, 2.0 * uw[0] - 1.0).0;
        if self.dim == 3 {
            v *= legendre(b, 2.0 * uw[1] - 1.0).0;
        }
        v
    }

    /// Value at facet-local coordinates of the owning cell.
    pub fn eval(&self, uw: [f64; 2]) -> f64 {
        self.coeffs.iter().enumerate().map(|(e, c)| c * self.basis(e, uw)).sum()
    }
}

/// Projects the Dirichlet datum on every Dirichlet facet using `nq` Gauss
/// points per facet axis.
pub fn project_dirichlet<C: CoefficientField + ?Sized>(
    coeff: &C,
    mesh: &Mesh,
    k: usize,
    nq: usize,
) -> Result<Vec<FacetProjection>> {
    let dim = mesh.dim();
    let rule = facet_rule(dim, &gauss_rule(nq)?.to_unit());
    let nb = k.pow(dim as u32 - 1);
    let mut out = Vec::new();
    for (f, facet) in mesh.facets().iter().enumerate() {
        if !facet.is_boundary() || facet.tag != Some(BoundaryTag::Dirichlet) {
            continue;
        }
        let (c, lf) = facet.owner;
        let geom = mesh.geometry(c);
        let mut proj = FacetProjection {
            facet: f,
            side: facet.owner,
            dim,
            k,
            coeffs: vec![0.0; nb],
        };
        let samples: Vec<(f64, [f64; 2], f64)> = rule
            .iter()
            .map(|(uw, w)| (coeff.dirichlet(&geom.map(&facet_point(dim, lf, uw[0], uw[1]))), *uw, *w))
            .collect();
        for e in 0..nb {
            let [a, b] = proj.index(e);
            let norm = 1.0 / ((2 * a + 1) as f64 * if dim == 3 { (2 * b + 1) as f64 } else { 1.0 });
            let s: f64 = samples.iter().map(|(g, uw, w)| w * g * proj.basis(e, *uw)).sum();
            proj.coeffs[e] = s / norm;
        }
        out.push(proj);
    }
    Ok(out)
}

/// Divergence matrix `D[w, v] = (∇·v, w)`, one row per pressure DOF. The
/// local matrix `(∇̂·v̂, ŵ)_Ê` is geometry independent.
pub fn assemble_div<E: VelocityElement + ?Sized>(
    mesh: &Mesh,
    dofs: &DofMap,
    elem: &E,
    pressure: &PressureBasis,
) -> Result<CsrMatrix> {
    let dim = mesh.dim();
    let rule = tensor_rule(&gauss_rule(pressure.k() + 1)?.to_unit(), dim)?;
    let vt = elem.tabulate(&rule.nodes);
    let pt = pressure.tabulate(&rule.nodes);
    let (np, nv) = (pressure.len(), elem.len());
    let mut local = DMatrix::<f64>::zeros(np, nv);
    for (p, w) in rule.weights.iter().enumerate() {
        for q in 0..np {
            let wq = w * pt[p * np + q];
            for a in 0..nv {
                local[(q, a)] += wq * vt.divergence(p, a);
            }
        }
    }
    let cut = 1e-14 * local.amax();
    let mut trip = Vec::with_capacity(mesh.num_cells() * np * nv);
    for c in 0..mesh.num_cells() {
        for (a, d) in dofs.cell_dofs(c).iter().enumerate() {
            let Some((g, s)) = *d else { continue };
            for q in 0..np {
                let v = local[(q, a)];
                if v.abs() > cut {
                    trip.push((dofs.pressure_dof(c, q), g, s * v));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(
        dofs.num_pressure(),
        dofs.num_velocity(),
        &trip,
    ))
}

/// Right-hand sides `G[v] = -⟨R g, v·n⟩_{Γ_D}` and `F[w] = (f, w)`, using
/// `nq` Gauss points per axis.
pub fn assemble_rhs<E, C>(
    mesh: &Mesh,
    dofs: &DofMap,
    elem: &E,
    pressure: &PressureBasis,
    coeff: &C,
    nq: usize,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    E: VelocityElement + ?Sized,
    C: CoefficientField + ?Sized,
{
    let dim = mesh.dim();
    let rule1 = gauss_rule(nq)?.to_unit();
    let vol = tensor_rule(&rule1, dim)?;
    let pt = pressure.tabulate(&vol.nodes);
    let np = pressure.len();

    let mut f = vec![0.0; dofs.num_pressure()];
    f.par_chunks_mut(np).enumerate().try_for_each(|(c, fc)| -> Result<()> {
        let geom = mesh.geometry(c);
        for (p, (xh, w)) in vol.nodes.iter().zip(&vol.weights).enumerate() {
            let mp = geom.map_point(xh)?;
            let s = w * mp.jac * coeff.source(&mp.x);
            for (q, fq) in fc.iter_mut().enumerate() {
                *fq += s * pt[p * np + q];
            }
        }
        Ok(())
    })?;

    let mut g = vec![0.0; dofs.num_velocity()];
    let k = pressure.k();
    let frule = facet_rule(dim, &rule1);
    let tables: Vec<_> = (0..2 * dim)
        .map(|lf| {
            let pts: Vec<[f64; 3]> = frule.iter().map(|(uw, _)| facet_point(dim, lf, uw[0], uw[1])).collect();
            elem.tabulate(&pts)
        })
        .collect();
    for proj in project_dirichlet(coeff, mesh, k, nq)? {
        let (c, lf) = proj.side;
        let mut n_hat = Vector3::zeros();
        n_hat[lf / 2] = if lf % 2 == 1 { 1.0 } else { -1.0 };
        let tab = &tables[lf];
        for (p, (uw, w)) in frule.iter().enumerate() {
            let rg = w * proj.eval(*uw);
            for (a, d) in dofs.cell_dofs(c).iter().enumerate() {
                if let Some((gi, s)) = *d {
                    g[gi] -= s * rg * tab.value(p, a).dot(&n_hat);
                }
            }
        }
    }
    Ok((g, f))
}

/// Raviart-Thomas velocity mass matrix `(K⁻¹u, v)` with `nq` Gauss points
/// per axis.
pub fn assemble_rt_mass<E, C>(mesh: &Mesh, dofs: &DofMap, elem: &E, coeff: &C, nq: usize) -> Result<CsrMatrix>
where
    E: VelocityElement + ?Sized,
    C: CoefficientField + ?Sized,
{
    let dim = mesh.dim();
    let vol = tensor_rule(&gauss_rule(nq)?.to_unit(), dim)?;
    let tab = elem.tabulate(&vol.nodes);
    let nv = elem.len();
    let locals: Result<Vec<DMatrix<f64>>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.geometry(c);
            let mut a = DMatrix::zeros(nv, nv);
            for (p, (xh, w)) in vol.nodes.iter().zip(&vol.weights).enumerate() {
                let mp = geom.map_point(xh)?;
                let ki = mapped_permeability_inverse(&mp, &coeff.permeability(&mp.x), dim)? * *w;
                for j in 0..nv {
                    let kv = ki * tab.value(p, j);
                    for i in 0..nv {
                        a[(i, j)] += tab.value(p, i).dot(&kv);
                    }
                }
            }
            Ok(a)
        })
        .collect();
    let mut trip = Vec::new();
    for (c, a) in locals?.iter().enumerate() {
        let cd = dofs.cell_dofs(c);
        for (i, di) in cd.iter().enumerate() {
            let Some((gi, si)) = *di else { continue };
            for (j, dj) in cd.iter().enumerate() {
                let Some((gj, sj)) = *dj else { continue };
                if a[(i, j)] != 0.0 {
                    trip.push((gi, gj, si * sj * a[(i, j)]));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(
        dofs.num_velocity(),
        dofs.num_velocity(),
        &trip,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::tests::Constant;
    use crate::mesh::structured_mesh;
    use crate::refbasis::{NodalBasis, RtElement};
    use nalgebra::Matrix3;

    struct Data<G: Fn(&Vector3<f64>) -> f64 + Sync>(G);

    impl<G: Fn(&Vector3<f64>) -> f64 + Sync> CoefficientField for Data<G> {
        fn permeability(&self, _: &Vector3<f64>) -> Matrix3<f64> {
            Matrix3::identity()
        }
        fn source(&self, x: &Vector3<f64>) -> f64 {
            (self.0)(x)
        }
        fn dirichlet(&self, x: &Vector3<f64>) -> f64 {
            (self.0)(x)
        }
    }

    #[test]
    fn projection_of_constants_and_linears() {
        let m = structured_mesh(2, [2, 2, 1], |x| x).unwrap();
        let p = project_dirichlet(&Data(|_| 3.5), &m, 1, 4).unwrap();
        assert_eq!(p.len(), 8);
        assert!(p.iter().all(|q| (q.eval([0.3, 0.0]) - 3.5).abs() < 1e-14));
        let p = project_dirichlet(&Data(|x| 2.0 * x[0] - x[1]), &m, 2, 4).unwrap();
        for q in &p {
            let (c, lf) = q.side;
            let x = m.geometry(c).map(&facet_point(2, lf, 0.7, 0.0));
            assert!((q.eval([0.7, 0.0]) - (2.0 * x[0] - x[1])).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_for_k1_is_facet_mean() {
        let m = structured_mesh(2, [1, 1, 1], |x| x).unwrap();
        let p = project_dirichlet(&Data(|x| (3.0 * x[0]).sin()), &m, 1, 6).unwrap();
        // facet y = 0: mean of sin(3x) over [0,1]
        let bottom = p.iter().find(|q| q.side.1 == 2).unwrap();
        let mean = (1.0 - 3f64.cos()) / 3.0;
        assert!((bottom.coeffs[0] - mean).abs() < 1e-10);
    }

    #[test]
    fn div_of_unit_pressure_is_net_flux() {
        // single cell, k=1: (∇·v, 1) equals the signed facet integral of v̂·n̂
        let m = structured_mesh(2, [1, 1, 1], |[x, y, z]| [x + 0.2 * y, 1.3 * y + 0.1 * x * y, z]).unwrap();
        let b = NodalBasis::new(2, 1).unwrap();
        let d = DofMap::new(&m, &b).unwrap();
        let p = PressureBasis::new(2, 1).unwrap();
        let div = assemble_div(&m, &d, &b, &p).unwrap();
        let r = gauss_rule(3).unwrap().to_unit();
        for a in 0..b.len() {
            let mut flux = 0.0;
            for lf in 0..4 {
                let pts: Vec<[f64; 3]> = r.points.iter().map(|&u| facet_point(2, lf, u, 0.0)).collect();
                let t = b.tabulate(&pts);
                let sign = if lf % 2 == 1 { 1.0 } else { -1.0 };
                for (i, w) in r.weights.iter().enumerate() {
                    flux += w * sign * t.value(i, a)[lf / 2];
                }
            }
            assert!((div.get(0, a) - flux).abs() < 1e-13);
        }
    }

    #[test]
    fn div_matches_physical_quadrature() {
        let m = structured_mesh(2, [1, 1, 1], |[x, y, z]| [x + 0.2 * y * x, y + 0.1 * x, z]).unwrap();
        let b = NodalBasis::new(2, 2).unwrap();
        let d = DofMap::new(&m, &b).unwrap();
        let p = PressureBasis::new(2, 2).unwrap();
        let div = assemble_div(&m, &d, &b, &p).unwrap();
        // physical oracle: ∫_E (1/J ∇̂·v̂) w J dx̂ with a high-order rule
        let vol = tensor_rule(&gauss_rule(8).unwrap().to_unit(), 2).unwrap();
        let vt = b.tabulate(&vol.nodes);
        let g = m.geometry(0);
        for q in 0..p.len() {
            for a in 0..b.len() {
                let mut s = 0.0;
                for (i, (xh, w)) in vol.nodes.iter().zip(&vol.weights).enumerate() {
                    let mp = g.map_point(xh).unwrap();
                    s += w * mp.jac * (vt.divergence(i, a) / mp.jac) * p.eval(xh)[q];
                }
                assert!((div.get(q, a) - s).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn unit_source_gives_cell_areas() {
        let h = 0.5;
        let m = structured_mesh(2, [2, 2, 1], |[x, y, z]| [x, y, z]).unwrap();
        let b = NodalBasis::new(2, 1).unwrap();
        let d = DofMap::new(&m, &b).unwrap();
        let p = PressureBasis::new(2, 1).unwrap();
        let (g, f) = assemble_rhs(&m, &d, &b, &p, &Constant(Matrix3::identity()), 4).unwrap();
        assert!(f.iter().all(|v| (v - h * h).abs() < 1e-15));
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rt_mass_is_symmetric_and_positive() {
        let m = structured_mesh(2, [1, 1, 1], |x| x).unwrap();
        let rt = RtElement::new(2, 0).unwrap();
        let d = DofMap::new_rt(&m, &rt).unwrap();
        let a = assemble_rt_mass(&m, &d, &rt, &Constant(Matrix3::identity()), 3).unwrap();
        let dense = a.to_dense();
        assert!((&dense - dense.transpose()).amax() < 1e-14);
        assert!(dense.clone().cholesky().is_some());
        // RT_0 on the unit square: ∫ x̂² = 1/3 on the diagonal
        for i in 0..4 {
            assert!((dense[(i, i)] - 1.0 / 3.0).abs() < 1e-14);
        }
    }
}
