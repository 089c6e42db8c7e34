//! One-dimensional Gauss and Gauss-Lobatto rules on `[-1, 1]` and their
//! tensor products.
//!
//! Nodes are computed by Newton iteration on Legendre polynomials. The
//! canonical interval is `[-1, 1]`; [`Rule1D::to_unit`] rescales a rule to
//! `[0, 1]`, which is the reference cell used by the mesh mappings.

use crate::error::{MfmfeError, Result};

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAXIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Gauss,
    GaussLobatto,
}

/// A one-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1D {
    pub kind: RuleKind,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree integrated exactly.
    pub exactness_degree: usize,
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Affine image of a `[-1, 1]` rule on `[0, 1]`; weights are halved.
    pub fn to_unit(&self) -> Rule1D {
        Rule1D {
            kind: self.kind,
            points: self.points.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: self.weights.iter().map(|w| 0.5 * w).collect(),
            exactness_degree: self.exactness_degree,
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    // P_{m+1}' = P_{m-1}' + (2m+1) P_m is stable up to the endpoints
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    for m in 1..n {
        let mf = m as f64;
        let p2 = ((2.0 * mf + 1.0) * x * p1 - mf * p0) / (mf + 1.0);
        let d2 = d0 + (2.0 * mf + 1.0) * p1;
        (p0, p1) = (p1, p2);
        (d0, d1) = (d1, d2);
    }
    let dp = d1;
    (p1, dp)
}

/// `n`-point Legendre-Gauss rule, exact for degree `2n - 1`.
pub fn gauss_rule(n: usize) -> Result<Rule1D> {
    if n < 1 {
        return Err(MfmfeError::InvalidArgument(format!(
            "Gauss rule needs at least 1 point, got {n}"
        )));
    }
    let nf = n as f64;
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..NEWTON_MAXIT {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        points[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    symmetrize(&mut points, &mut weights);
    Ok(Rule1D {
        kind: RuleKind::Gauss,
        points,
        weights,
        exactness_degree: 2 * n - 1,
    })
}

/// `n`-point Gauss-Lobatto rule: the endpoints plus the roots of `P'_{n-1}`,
/// exact for degree `2n - 3`.
pub fn gauss_lobatto_rule(n: usize) -> Result<Rule1D> {
    if n < 2 {
        return Err(MfmfeError::InvalidArgument(format!(
            "Gauss-Lobatto rule needs at least 2 points, got {n}"
        )));
    }
    let m = n - 1;
    let mf = m as f64;
    let mut points = vec![0.0; n];
    points[0] = -1.0;
    points[m] = 1.0;
    for (i, pt) in points.iter_mut().enumerate().take(m).skip(1) {
        let mut x = -(std::f64::consts::PI * i as f64 / mf).cos();
        for _ in 0..NEWTON_MAXIT {
            let (p, dp) = legendre(m, x);
            let d2p = (2.0 * x * dp - mf * (mf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                break;
            }
        }
        *pt = x;
    }
    let mut weights: Vec<f64> = points
        .iter()
        .map(|&x| {
            let (p, _) = legendre(m, x);
            2.0 / (mf * (mf + 1.0) * p * p)
        })
        .collect();
    symmetrize(&mut points, &mut weights);
    Ok(Rule1D {
        kind: RuleKind::GaussLobatto,
        points,
        weights,
        exactness_degree: 2 * n - 3,
    })
}

/// Enforce exact mirror symmetry `x_{n-1-i} = -x_i` of a computed rule.
fn symmetrize(points: &mut [f64], weights: &mut [f64]) {
    let n = points.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (points[j] - points[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        points[i] = -x;
        points[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
}

/// Tensor-product rule in `d` dimensions.
///
/// Nodes are ordered lexicographically with the last axis running fastest:
/// the node with per-axis indices `(i_0, .., i_{d-1})` sits at linear index
/// `((i_0 * n) + i_1) * n + i_2`.
#[derive(Debug, Clone)]
pub struct RuleND {
    pub dim: usize,
    /// Points per axis.
    pub n: usize,
    /// Node coordinates, padded with zeros beyond `dim`.
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Per-axis index of every node.
    pub index: Vec<[usize; 3]>,
}

impl RuleND {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn linear_index(&self, idx: &[usize; 3]) -> usize {
        linear_index(self.dim, self.n, idx)
    }
}

pub fn linear_index(dim: usize, n: usize, idx: &[usize; 3]) -> usize {
    idx[..dim].iter().fold(0, |acc, &i| acc * n + i)
}

/// Per-axis multi-index for a lexicographic linear index.
pub fn multi_index(dim: usize, n: usize, mut lin: usize) -> [usize; 3] {
    let mut idx = [0; 3];
    for a in (0..dim).rev() {
        idx[a] = lin % n;
        lin /= n;
    }
    idx
}

pub fn tensor_rule(rule: &Rule1D, dim: usize) -> Result<RuleND> {
    if !(2..=3).contains(&dim) {
        return Err(MfmfeError::InvalidArgument(format!(
            "tensor rules exist for d = 2 or 3, got {dim}"
        )));
    }
    let n = rule.len();
    let count = n.pow(dim as u32);
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut index = Vec::with_capacity(count);
    for lin in 0..count {
        let idx = multi_index(dim, n, lin);
        let mut x = [0.0; 3];
        let mut w = 1.0;
        for a in 0..dim {
            x[a] = rule.points[idx[a]];
            w *= rule.weights[idx[a]];
        }
        nodes.push(x);
        weights.push(w);
        index.push(idx);
    }
    Ok(RuleND {
        dim,
        n,
        nodes,
        weights,
        index,
    })
}
