//! Reference-element bases on `[0,1]^d`.
//!
//! The enhanced velocity space is built from monomial spans in
//! `t = 2x̂ - 1` and turned into a nodal basis by inverting the Vandermonde
//! matrix of point-value functionals at the Gauss-Lobatto nodes. The
//! nodal degrees of freedom are ordered node-major, direction-minor: DOF
//! `d*i + j` is component `j` at node `i`.

pub mod checks;
pub mod poly;
mod rt;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{MfmfeError, Result};
use crate::quadrature::{gauss_lobatto_rule, gauss_rule, legendre, multi_index, tensor_rule, Rule1D, RuleND};
use poly::{condition_number, enhanced_span, PolySpan};

pub use checks::{check_element, ElementReport};
pub use rt::RtElement;

/// Lagrange polynomials through `nodes` and their derivatives at `x`.
pub fn lagrange_1d(nodes: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.len();
    let mut val = vec![1.0; n];
    let mut der = vec![0.0; n];
    for i in 0..n {
        let mut denom = 1.0;
        for (m, &xm) in nodes.iter().enumerate() {
            if m != i {
                denom *= nodes[i] - xm;
            }
        }
        let mut p = 1.0;
        let mut dp = 0.0;
        for (m, &xm) in nodes.iter().enumerate() {
            if m != i {
                dp = dp * (x - xm) + p;
                p *= x - xm;
            }
        }
        val[i] = p / denom;
        der[i] = dp / denom;
    }
    (val, der)
}

/// Values and divergences of every basis function at a set of points.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub nbasis: usize,
    /// Point-major: entry `p * nbasis + a`.
    pub values: Vec<Vector3<f64>>,
    pub div: Vec<f64>,
}

impl BasisTable {
    pub fn value(&self, p: usize, a: usize) -> &Vector3<f64> {
        &self.values[p * self.nbasis + a]
    }

    pub fn divergence(&self, p: usize, a: usize) -> f64 {
        self.div[p * self.nbasis + a]
    }
}

/// A reference velocity element that can be tabulated at points.
pub trait VelocityElement: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn tabulate(&self, points: &[[f64; 3]]) -> BasisTable;
}

impl VelocityElement for NodalBasis {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.dim * self.nodes.len()
    }

    fn tabulate(&self, points: &[[f64; 3]]) -> BasisTable {
        NodalBasis::tabulate(self, points)
    }
}

impl VelocityElement for RtElement {
    fn dim(&self) -> usize {
        RtElement::dim(self)
    }

    fn len(&self) -> usize {
        RtElement::len(self)
    }

    fn tabulate(&self, points: &[[f64; 3]]) -> BasisTable {
        RtElement::tabulate(self, points)
    }
}

/// Nodal basis of the enhanced space `V̂^k` on `[0,1]^d`.
#[derive(Debug, Clone)]
pub struct NodalBasis {
    dim: usize,
    k: usize,
    gl: Rule1D,
    nodes: RuleND,
    /// Per component: basis × tensor Legendre coefficients in `t`.
    coeffs: [DMatrix<f64>; 3],
    condition: f64,
}

impl NodalBasis {
    pub fn new(dim: usize, k: usize) -> Result<NodalBasis> {
        if !(2..=3).contains(&dim) || !(1..=6).contains(&k) {
            return Err(MfmfeError::InvalidArgument(format!(
                "enhanced element needs d in {{2,3}} and 1 <= k <= 6, got d={dim}, k={k}"
            )));
        }
        let gl = gauss_lobatto_rule(k + 1)?.to_unit();
        let nodes = tensor_rule(&gl, dim)?;
        let span = enhanced_span(dim, k as u32);
        let deg = k + 1;
        // Rewrite the span in tensor Legendre coordinates and orthonormalize
        // it; this keeps the Vandermonde inverse well conditioned for k up to 6.
        let dense = dense_coefficients(&span, deg);
        let m = dense_len(dim, deg);
        let mut stacked = DMatrix::zeros(3 * m, span.len());
        for j in 0..dim {
            let leg = dense[j].clone() * to_legendre(dim, deg).transpose();
            stacked
                .view_mut((j * m, 0), (m, span.len()))
                .copy_from(&leg.transpose());
        }
        let q = stacked.qr().q();
        let onb: [DMatrix<f64>; 3] = [0, 1, 2].map(|j| q.view((j * m, 0), (m, span.len())).transpose());
        let n = span.len();
        let mut v = DMatrix::zeros(n, n);
        for (p, xh) in nodes.nodes.iter().enumerate() {
            let (lv, _) = legendre_tensor(dim, deg, &to_t(xh));
            for j in 0..dim {
                let col = &onb[j] * &lv;
                for s in 0..n {
                    v[(p * dim + j, s)] = col[s];
                }
            }
        }
        let condition = condition_number(&v);
        if !condition.is_finite() || condition > 1e12 {
            return Err(MfmfeError::ElementConstruction(format!(
                "nodal Vandermonde matrix is singular (condition {condition:e})"
            )));
        }
        let inv = v
            .try_inverse()
            .ok_or_else(|| MfmfeError::ElementConstruction("nodal Vandermonde matrix is singular".into()))?;
        let coeffs = [0, 1, 2].map(|j| inv.transpose() * &onb[j]);
        Ok(NodalBasis {
            dim,
            k,
            gl,
            nodes,
            coeffs,
            condition,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.dim * self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Gauss-Lobatto nodes and weights on `[0,1]^d`.
    pub fn nodes(&self) -> &RuleND {
        &self.nodes
    }

    pub fn gl_1d(&self) -> &Rule1D {
        &self.gl
    }

    pub fn node_index(&self, i: usize) -> [usize; 3] {
        multi_index(self.dim, self.k + 1, i)
    }

    pub fn vandermonde_condition(&self) -> f64 {
        self.condition
    }

    /// Values and reference divergences of all basis functions at `x̂`.
    pub fn eval(&self, xh: &[f64; 3]) -> (Vec<Vector3<f64>>, Vec<f64>) {
        let (mono, dmono) = legendre_tensor(self.dim, self.k + 1, &to_t(xh));
        let n = self.len();
        let mut vals = vec![Vector3::zeros(); n];
        let mut div = vec![0.0; n];
        for j in 0..self.dim {
            let cv = &self.coeffs[j] * &mono;
            // d/dx̂ = 2 d/dt
            let cd = &self.coeffs[j] * &dmono[j] * 2.0;
            for a in 0..n {
                vals[a][j] = cv[a];
                div[a] += cd[a];
            }
        }
        (vals, div)
    }

    pub fn tabulate(&self, points: &[[f64; 3]]) -> BasisTable {
        let n = self.len();
        let mut values = Vec::with_capacity(points.len() * n);
        let mut div = Vec::with_capacity(points.len() * n);
        for p in points {
            let (v, d) = self.eval(p);
            values.extend(v);
            div.extend(d);
        }
        BasisTable { nbasis: n, values, div }
    }
}

fn to_t(xh: &[f64; 3]) -> [f64; 3] {
    [2.0 * xh[0] - 1.0, 2.0 * xh[1] - 1.0, 2.0 * xh[2] - 1.0]
}

fn dense_len(dim: usize, deg: usize) -> usize {
    (deg + 1).pow(dim as u32)
}

fn dense_index(dim: usize, deg: usize, e: [u32; 3]) -> usize {
    let b = deg + 1;
    let mut idx = 0;
    for &ea in e.iter().take(dim) {
        idx = idx * b + ea as usize;
    }
    idx
}

fn dense_coefficients(span: &PolySpan, deg: usize) -> [DMatrix<f64>; 3] {
    let dim = span.dim;
    let m = dense_len(dim, deg);
    let mut out = [
        DMatrix::zeros(span.len(), m),
        DMatrix::zeros(span.len(), m),
        DMatrix::zeros(span.len(), m),
    ];
    for (s, term) in span.terms.iter().enumerate() {
        for j in 0..dim {
            for mono in &term.comps[j].terms {
                out[j][(s, dense_index(dim, deg, mono.exp))] += mono.coef;
            }
        }
    }
    out
}

/// `A[n, e]`: coefficient of `P_n` in the Legendre expansion of `t^e`,
/// as a tensor-product matrix on dense coefficient vectors.
fn to_legendre(dim: usize, deg: usize) -> DMatrix<f64> {
    let g = gauss_rule(deg + 2).expect("small Gauss rule");
    let one = DMatrix::from_fn(deg + 1, deg + 1, |n, e| {
        let s: f64 = g
            .points
            .iter()
            .zip(&g.weights)
            .map(|(t, w)| w * t.powi(e as i32) * legendre(n, *t).0)
            .sum();
        let c = 0.5 * (2 * n + 1) as f64 * s;
        if c.abs() < 1e-14 {
            0.0
        } else {
            c
        }
    });
    let m = dense_len(dim, deg);
    DMatrix::from_fn(m, m, |r, c| {
        let (ir, ic) = (multi_index(dim, deg + 1, r), multi_index(dim, deg + 1, c));
        (0..dim).map(|a| one[(ir[a], ic[a])]).product()
    })
}

/// Tensor Legendre values at `t` and their partial derivatives in `t`.
fn legendre_tensor(dim: usize, deg: usize, t: &[f64; 3]) -> (DVector<f64>, [DVector<f64>; 3]) {
    let b = deg + 1;
    let mut pw = [[0.0; 8]; 3];
    let mut dpw = [[0.0; 8]; 3];
    assert!(b <= 8, "polynomial degree too high");
    for a in 0..dim {
        for n in 0..b {
            (pw[a][n], dpw[a][n]) = legendre(n, t[a]);
        }
    }
    let m = dense_len(dim, deg);
    let mut v = DVector::zeros(m);
    let mut d = [DVector::zeros(m), DVector::zeros(m), DVector::zeros(m)];
    for idx in 0..m {
        let e = multi_index(dim, b, idx);
        let mut p = 1.0;
        for a in 0..dim {
            p *= pw[a][e[a]];
        }
        v[idx] = p;
        for da in 0..dim {
            let mut q = 1.0;
            for a in 0..dim {
                q *= if a == da { dpw[a][e[a]] } else { pw[a][e[a]] };
            }
            d[da][idx] = q;
        }
    }
    (v, d)
}

/// Discontinuous `Q^{k-1}` pressure basis: Lagrange polynomials at the
/// tensor `k`-point Gauss nodes.
#[derive(Debug, Clone)]
pub struct PressureBasis {
    dim: usize,
    k: usize,
    gauss: Rule1D,
    nodes: RuleND,
}

impl PressureBasis {
    pub fn new(dim: usize, k: usize) -> Result<PressureBasis> {
        if k < 1 {
            return Err(MfmfeError::InvalidArgument("pressure degree needs k >= 1".into()));
        }
        let gauss = gauss_rule(k)?.to_unit();
        let nodes = tensor_rule(&gauss, dim)?;
        Ok(PressureBasis { dim, k, gauss, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of Gauss points per axis; the polynomial degree is `k - 1`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Gauss nodes and weights on `[0,1]^d`.
    pub fn nodes(&self) -> &RuleND {
        &self.nodes
    }

    pub fn eval(&self, xh: &[f64; 3]) -> Vec<f64> {
        let l: Vec<Vec<f64>> = (0..self.dim)
            .map(|a| lagrange_1d(&self.gauss.points, xh[a]).0)
            .collect();
        (0..self.len())
            .map(|q| {
                let idx = multi_index(self.dim, self.k, q);
                (0..self.dim).map(|a| l[a][idx[a]]).product()
            })
            .collect()
    }

    /// Basis values, point-major, at a set of points.
    pub fn tabulate(&self, points: &[[f64; 3]]) -> Vec<f64> {
        points.iter().flat_map(|p| self.eval(p)).collect()
    }
}
