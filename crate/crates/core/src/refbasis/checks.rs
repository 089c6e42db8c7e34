//! Numerical self-checks of the enhanced element: unisolvence, divergence
//! and normal-trace spaces, the direct sum with `RT_{k-1}` and the
//! Gauss-Lobatto orthogonality of the `RT_{k-1}` interpolation error.

use std::fmt;

use nalgebra::DMatrix;

use super::poly::{condition_number, enhanced_span, numerical_rank, rt_span, tensor_exponents};
use super::NodalBasis;
use crate::error::{MfmfeError, Result};
use crate::mesh::facet_axes;
use crate::quadrature::{gauss_lobatto_rule, gauss_rule, legendre, tensor_rule, Rule1D};

#[derive(Debug, Clone)]
pub struct ElementReport {
    pub dim: usize,
    pub k: usize,
    pub dimension: usize,
    pub expected_dimension: usize,
    pub nodal_condition: f64,
    /// Condition number of the facet/interior moment matrix.
    pub moment_condition: f64,
    /// Largest relative distance of `div̂ v̂` from `Q^{k-1}`.
    pub divergence_residual: f64,
    /// Largest relative distance of `v̂·n̂` from `R^k(ê)`.
    pub trace_residual: f64,
    pub direct_sum_rank: usize,
    /// Largest `|(q̂ - Π̂q̂, v̂)_GL|` over nodal basis functions `q̂` and `v̂`
    /// in `Q^{k-1}(Ê)^d`.
    pub orthogonality_residual: f64,
}

impl ElementReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.dimension == self.expected_dimension
            && self.direct_sum_rank == self.expected_dimension
            && self.nodal_condition < 1e10
            && self.moment_condition < 1e10
            && self.divergence_residual < tol
            && self.trace_residual < tol
            && self.orthogonality_residual < tol
    }
}

impl fmt::Display for ElementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d = {}, k = {}", self.dim, self.k)?;
        writeln!(
            f,
            "  dimension            {} (expected {})",
            self.dimension, self.expected_dimension
        )?;
        writeln!(f, "  direct-sum rank      {}", self.direct_sum_rank)?;
        writeln!(f, "  nodal condition      {:.3e}", self.nodal_condition)?;
        writeln!(f, "  moment condition     {:.3e}", self.moment_condition)?;
        writeln!(f, "  divergence residual  {:.3e}", self.divergence_residual)?;
        writeln!(f, "  trace residual       {:.3e}", self.trace_residual)?;
        write!(f, "  GL orthogonality     {:.3e}", self.orthogonality_residual)
    }
}

/// Linear functionals given by weighted component samples at shared points
/// in `t`: row `f` holds `(point, component, weight)` triples.
struct Functionals {
    points: Vec<[f64; 3]>,
    rows: Vec<Vec<(usize, usize, f64)>>,
}

impl Functionals {
    fn len(&self) -> usize {
        self.rows.len()
    }

    /// Applies every functional to every column of a table whose rows are
    /// `(point, component)` pairs, point-major.
    fn apply(&self, dim: usize, table: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.len(), table.ncols());
        for (r, row) in self.rows.iter().enumerate() {
            for &(p, j, w) in row {
                for c in 0..table.ncols() {
                    out[(r, c)] += w * table[(p * dim + j, c)];
                }
            }
        }
        out
    }
}

fn legendre_product(dim: usize, n: &[u32; 3], t: &[f64; 3], skip: Option<usize>) -> f64 {
    (0..dim)
        .filter(|&a| Some(a) != skip)
        .map(|a| legendre(n[a] as usize, t[a]).0)
        .product()
}

/// Tensor Gauss points on facet `lf` of `[-1,1]^d`, with weights.
fn facet_points(dim: usize, lf: usize, g: &Rule1D) -> Vec<([f64; 3], f64)> {
    let (a, s) = (lf / 2, lf % 2);
    let (axes, na) = facet_axes(dim, lf);
    (0..g.len().pow(na as u32))
        .map(|q| {
            let mut t = [0.0; 3];
            t[a] = if s == 1 { 1.0 } else { -1.0 };
            let mut w = 1.0;
            let mut rem = q;
            for &ax in axes[..na].iter().rev() {
                let i = rem % g.len();
                rem /= g.len();
                t[ax] = g.points[i];
                w *= g.weights[i];
            }
            (t, w)
        })
        .collect()
}

/// Moments on `[-1,1]^d`: normal moments against `Q^facet_deg` on each
/// facet, and for every component `j` interior moments against
/// `P^{normal_deg}(t_j) ⊗ Q^{other_deg}(others)`.
fn moment_functionals(dim: usize, facet_deg: u32, normal_deg: Option<u32>, other_deg: u32) -> Result<Functionals> {
    let g = gauss_rule(facet_deg.max(other_deg) as usize + 3)?;
    let vol = tensor_rule(&g, dim)?;
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for lf in 0..2 * dim {
        let a = lf / 2;
        let sign = if lf % 2 == 1 { 1.0 } else { -1.0 };
        let base = points.len();
        let fp = facet_points(dim, lf, &g);
        points.extend(fp.iter().map(|(t, _)| *t));
        let (axes, na) = facet_axes(dim, lf);
        let mut deg = [0; 3];
        for &ax in &axes[..na] {
            deg[ax] = facet_deg;
        }
        for e in tensor_exponents(dim, deg) {
            rows.push(
                fp.iter()
                    .enumerate()
                    .map(|(q, (t, w))| (base + q, a, sign * w * legendre_product(dim, &e, t, Some(a))))
                    .collect(),
            );
        }
    }
    if let Some(nd) = normal_deg {
        let base = points.len();
        points.extend(vol.nodes.iter().copied());
        for j in 0..dim {
            let mut deg = [other_deg; 3];
            deg[j] = nd;
            for e in tensor_exponents(dim, deg) {
                rows.push(
                    vol.nodes
                        .iter()
                        .zip(&vol.weights)
                        .enumerate()
                        .map(|(q, (t, w))| (base + q, j, w * legendre_product(dim, &e, t, None)))
                        .collect(),
                );
            }
        }
    }
    Ok(Functionals { points, rows })
}

/// Basis values as a `(point, component) × basis` matrix.
fn basis_matrix(basis: &NodalBasis, tpoints: &[[f64; 3]]) -> DMatrix<f64> {
    let d = basis.dim();
    let xh: Vec<[f64; 3]> = tpoints.iter().map(to_unit).collect();
    let tab = basis.tabulate(&xh);
    DMatrix::from_fn(tpoints.len() * d, basis.len(), |r, a| tab.value(r / d, a)[r % d])
}

/// Largest relative residual of projecting each column of `values` onto the
/// columns of `fit`, which must be orthogonal in the discrete inner product
/// with weights `w` (tensor Legendre polynomials at Gauss points are).
fn fit_residual(fit: &DMatrix<f64>, w: &[f64], values: &DMatrix<f64>) -> f64 {
    let mut res = values.clone();
    for c in 0..fit.ncols() {
        let col = fit.column(c);
        let norm: f64 = (0..w.len()).map(|p| w[p] * col[p] * col[p]).sum();
        for v in 0..values.ncols() {
            let dot: f64 = (0..w.len()).map(|p| w[p] * col[p] * values[(p, v)]).sum();
            for p in 0..w.len() {
                res[(p, v)] -= dot / norm * col[p];
            }
        }
    }
    (0..values.ncols())
        .map(|c| res.column(c).amax() / values.column(c).amax().max(1.0))
        .fold(0.0, f64::max)
}

fn to_unit(t: &[f64; 3]) -> [f64; 3] {
    [0.5 * (t[0] + 1.0), 0.5 * (t[1] + 1.0), 0.5 * (t[2] + 1.0)]
}

fn interior_degree(k: u32) -> Option<u32> {
    if k >= 2 {
        Some(k - 2)
    } else {
        None
    }
}

pub fn check_element(dim: usize, k: usize) -> Result<ElementReport> {
    let basis = NodalBasis::new(dim, k)?;
    let ku = k as u32;
    let span = enhanced_span(dim, ku);
    let expected_dimension = dim * (k + 1).pow(dim as u32);

    let funcs = moment_functionals(dim, ku, interior_degree(ku), ku)?;
    let moment_condition = if funcs.len() == span.len() {
        condition_number(&funcs.apply(dim, &span.eval_matrix(&funcs.points)))
    } else {
        f64::INFINITY
    };

    let g = gauss_rule(k + 2)?;
    let vol = tensor_rule(&g, dim)?;
    let rank_pts = tensor_rule(&gauss_rule(k + 3)?, dim)?;
    let direct_sum_rank = numerical_rank(&span.eval_matrix(&rank_pts.nodes), 1e-10);

    // divergence in Q^{k-1}
    let qdiv = tensor_exponents(dim, [ku - 1; 3]);
    let fit = DMatrix::from_fn(vol.len(), qdiv.len(), |p, c| {
        legendre_product(dim, &qdiv[c], &vol.nodes[p], None)
    });
    let tab = basis.tabulate(&vol.nodes.iter().map(to_unit).collect::<Vec<_>>());
    let divs = DMatrix::from_fn(vol.len(), basis.len(), |p, a| tab.divergence(p, a));
    let divergence_residual = fit_residual(&fit, &vol.weights, &divs);

    // normal traces in Q^k of the facet
    let mut trace_residual: f64 = 0.0;
    for lf in 0..2 * dim {
        let a = lf / 2;
        let (pts, w): (Vec<[f64; 3]>, Vec<f64>) = facet_points(dim, lf, &g).into_iter().unzip();
        let (axes, na) = facet_axes(dim, lf);
        let mut deg = [0; 3];
        for &ax in &axes[..na] {
            deg[ax] = ku;
        }
        let exps = tensor_exponents(dim, deg);
        let fit = DMatrix::from_fn(pts.len(), exps.len(), |p, c| {
            legendre_product(dim, &exps[c], &pts[p], Some(a))
        });
        let vals = basis_matrix(&basis, &pts);
        let normal = DMatrix::from_fn(pts.len(), basis.len(), |p, b| vals[(p * dim + a, b)]);
        trace_residual = trace_residual.max(fit_residual(&fit, &w, &normal));
    }

    let orthogonality_residual = orthogonality_residual(&basis)?;

    Ok(ElementReport {
        dim,
        k,
        dimension: span.len(),
        expected_dimension,
        nodal_condition: basis.vandermonde_condition(),
        moment_condition,
        divergence_residual,
        trace_residual,
        direct_sum_rank,
        orthogonality_residual,
    })
}

/// `max |(q̂ - Π̂_{RT_{k-1}} q̂, v̂)_GL|` over nodal basis functions `q̂` and
/// Legendre fields `v̂ ∈ Q^{k-1}(Ê)^d`, computed on `[-1,1]^d`.
fn orthogonality_residual(basis: &NodalBasis) -> Result<f64> {
    let (dim, k) = (basis.dim(), basis.k() as u32);
    let rt = rt_span(dim, k - 1);
    let funcs = moment_functionals(dim, k - 1, interior_degree(k), k - 1)?;
    let m = funcs.apply(dim, &rt.eval_matrix(&funcs.points));
    let rhs = funcs.apply(dim, &basis_matrix(basis, &funcs.points));
    let coef = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| MfmfeError::ElementConstruction("RT moment matrix is singular".into()))?;
    let gl = tensor_rule(&gauss_lobatto_rule(k as usize + 1)?, dim)?;
    let err = basis_matrix(basis, &gl.nodes) - rt.eval_matrix(&gl.nodes) * coef;
    let tests = tensor_exponents(dim, [k - 1; 3]);
    let mut weights = DMatrix::zeros(dim * tests.len(), gl.len() * dim);
    for j in 0..dim {
        for (ie, e) in tests.iter().enumerate() {
            for (p, (t, w)) in gl.nodes.iter().zip(&gl.weights).enumerate() {
                weights[(j * tests.len() + ie, p * dim + j)] = w * legendre_product(dim, e, t, None);
            }
        }
    }
    Ok((weights * err).amax())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_checks_pass_for_low_orders() {
        for (dim, k) in [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2)] {
            let r = check_element(dim, k).unwrap();
            assert!(r.passes(1e-10), "{r}");
        }
    }

    #[test]
    fn moment_counts() {
        for dim in 2..=3usize {
            for k in 1..=3u32 {
                let f = moment_functionals(dim, k, interior_degree(k), k).unwrap();
                let ku = k as usize;
                let dof1 = 2 * dim * (ku + 1).pow(dim as u32 - 1);
                let dof2 = dim * (ku - 1) * (ku + 1).pow(dim as u32 - 1);
                assert_eq!(f.len(), dof1 + dof2);
            }
        }
    }

    #[test]
    fn detects_a_deficient_space() {
        // RT_{k-1} alone has the wrong dimension and fails
        let rt = rt_span(2, 1);
        let rank = numerical_rank(
            &rt.eval_matrix(&tensor_rule(&gauss_rule(4).unwrap(), 2).unwrap().nodes),
            1e-10,
        );
        assert!(rank < 2 * 9);
    }
}
