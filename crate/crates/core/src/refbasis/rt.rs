use nalgebra::Vector3;

use super::{lagrange_1d, BasisTable};
use crate::error::{MfmfeError, Result};
use crate::mesh::Pos;
use crate::quadrature::{gauss_lobatto_rule, gauss_rule, Rule1D};

/// Raviart-Thomas element `RT_r` on `[0,1]^d` with a tensor Lagrange basis:
/// component `j` interpolates at Gauss-Lobatto points (`r+2`) along axis `j`
/// and Gauss points (`r+1`) along the other axes. Normal DOFs on a facet are
/// therefore point values at the facet Gauss points.
#[derive(Debug, Clone)]
pub struct RtElement {
    dim: usize,
    r: usize,
    gl: Rule1D,
    gauss: Rule1D,
    /// `(component, per-axis index)` of every DOF, component-major.
    dofs: Vec<(usize, [usize; 3])>,
}

impl RtElement {
    pub fn new(dim: usize, r: usize) -> Result<RtElement> {
        if !(2..=3).contains(&dim) {
            return Err(MfmfeError::InvalidArgument(format!("RT element in d = {dim}")));
        }
        let gl = gauss_lobatto_rule(r + 2)?.to_unit();
        let gauss = gauss_rule(r + 1)?.to_unit();
        let mut dofs = Vec::new();
        for j in 0..dim {
            let n: Vec<usize> = (0..3)
                .map(|a| {
                    if a >= dim {
                        1
                    } else if a == j {
                        r + 2
                    } else {
                        r + 1
                    }
                })
                .collect();
            for i0 in 0..n[0] {
                for i1 in 0..n[1] {
                    for i2 in 0..n[2] {
                        dofs.push((j, [i0, i1, i2]));
                    }
                }
            }
        }
        Ok(RtElement {
            dim,
            r,
            gl,
            gauss,
            dofs,
        })
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn dof(&self, a: usize) -> (usize, [usize; 3]) {
        self.dofs[a]
    }

    /// Local facet carrying DOF `a`, if it is a normal DOF.
    pub fn facet_of(&self, a: usize) -> Option<usize> {
        let (j, idx) = self.dofs[a];
        if idx[j] == 0 {
            Some(2 * j)
        } else if idx[j] == self.r + 1 {
            Some(2 * j + 1)
        } else {
            None
        }
    }

    /// Per-axis position of the interpolation point of DOF `a`.
    pub fn position(&self, a: usize) -> [Pos; 3] {
        let (j, idx) = self.dofs[a];
        let mut pos = [Pos::Lo; 3];
        for (ax, p) in pos.iter_mut().enumerate().take(self.dim) {
            *p = if ax == j {
                match idx[ax] {
                    0 => Pos::Lo,
                    t if t == self.r + 1 => Pos::Hi,
                    t => Pos::In { t, n: self.r + 2 },
                }
            } else {
                Pos::In {
                    t: idx[ax],
                    n: self.r + 1,
                }
            };
        }
        pos
    }

    pub fn eval(&self, xh: &[f64; 3]) -> (Vec<Vector3<f64>>, Vec<f64>) {
        let gl: Vec<_> = (0..self.dim).map(|a| lagrange_1d(&self.gl.points, xh[a])).collect();
        let ga: Vec<_> = (0..self.dim)
            .map(|a| lagrange_1d(&self.gauss.points, xh[a]).0)
            .collect();
        let mut vals = Vec::with_capacity(self.len());
        let mut div = Vec::with_capacity(self.len());
        for &(j, idx) in &self.dofs {
            let mut other = 1.0;
            for a in (0..self.dim).filter(|&a| a != j) {
                other *= ga[a][idx[a]];
            }
            let mut v = Vector3::zeros();
            v[j] = gl[j].0[idx[j]] * other;
            vals.push(v);
            div.push(gl[j].1[idx[j]] * other);
        }
        (vals, div)
    }

    pub fn tabulate(&self, points: &[[f64; 3]]) -> BasisTable {
        let mut values = Vec::with_capacity(points.len() * self.len());
        let mut div = Vec::with_capacity(points.len() * self.len());
        for p in points {
            let (v, d) = self.eval(p);
            values.extend(v);
            div.extend(d);
        }
        BasisTable {
            nbasis: self.len(),
            values,
            div,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refbasis::poly::rt_dimension;

    #[test]
    fn dimension_and_facet_dofs() {
        for dim in 2..=3 {
            for r in 0..=2 {
                let e = RtElement::new(dim, r).unwrap();
                assert_eq!(e.len(), rt_dimension(dim, r));
                let nf = (0..e.len()).filter(|&a| e.facet_of(a).is_some()).count();
                assert_eq!(nf, 2 * dim * (r + 1).pow(dim as u32 - 1));
            }
        }
    }

    #[test]
    fn normal_trace_vanishes_on_other_facets() {
        let e = RtElement::new(2, 1).unwrap();
        // on x̂ = 0 only DOFs of facet 0 have nonzero x-component
        let (v, _) = e.eval(&[0.0, 0.37, 0.0]);
        for (a, va) in v.iter().enumerate() {
            if e.facet_of(a) != Some(0) {
                assert!(va[0].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn divergence_is_in_q_r() {
        // divergence of the sum of x-DOFs weighted by x-coordinates is constant
        let e = RtElement::new(3, 1).unwrap();
        let gl = gauss_lobatto_rule(3).unwrap().to_unit();
        for p in [[0.1, 0.2, 0.3], [0.8, 0.5, 0.9]] {
            let (_, d) = e.eval(&p);
            let s: f64 = (0..e.len())
                .map(|a| {
                    let (j, idx) = e.dof(a);
                    if j == 0 {
                        d[a] * gl.points[idx[0]]
                    } else {
                        0.0
                    }
                })
                .sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
