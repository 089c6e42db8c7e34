//! Sparse multivariate polynomials in `t = 2x̂ - 1 ∈ [-1,1]^d`.

use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coef: f64,
    pub exp: [u32; 3],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    pub terms: Vec<Term>,
}

impl Poly {
    pub fn monomial(coef: f64, exp: [u32; 3]) -> Poly {
        if coef == 0.0 {
            Poly::default()
        } else {
            Poly {
                terms: vec![Term { coef, exp }],
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef == 0.0)
    }

    pub fn eval(&self, t: &[f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coef * t[0].powi(m.exp[0] as i32) * t[1].powi(m.exp[1] as i32) * t[2].powi(m.exp[2] as i32))
            .sum()
    }

    /// `∂/∂t_axis`.
    pub fn deriv(&self, axis: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|m| m.exp[axis] > 0)
            .map(|m| {
                let mut exp = m.exp;
                exp[axis] -= 1;
                Term {
                    coef: m.coef * m.exp[axis] as f64,
                    exp,
                }
            })
            .collect();
        Poly { terms }
    }

    /// Largest exponent of `t_axis` among the nonzero terms.
    pub fn degree_in(&self, axis: usize) -> u32 {
        self.terms
            .iter()
            .filter(|m| m.coef != 0.0)
            .map(|m| m.exp[axis])
            .max()
            .unwrap_or(0)
    }
}

/// Vector-valued polynomial with three components (the third is zero in 2d).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VecPoly {
    pub comps: [Poly; 3],
}

impl VecPoly {
    pub fn eval(&self, t: &[f64; 3]) -> [f64; 3] {
        [self.comps[0].eval(t), self.comps[1].eval(t), self.comps[2].eval(t)]
    }

    /// Divergence in `t`.
    pub fn divergence(&self, dim: usize) -> Poly {
        let mut terms = Vec::new();
        for a in 0..dim {
            terms.extend(self.comps[a].deriv(a).terms);
        }
        Poly { terms }
    }
}

/// Finite list of vector polynomials spanning a space.
#[derive(Debug, Clone)]
pub struct PolySpan {
    pub dim: usize,
    pub terms: Vec<VecPoly>,
}

impl PolySpan {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn concat(mut self, other: PolySpan) -> PolySpan {
        self.terms.extend(other.terms);
        self
    }

    /// Rows are `(point, component)` pairs, point-major; columns are terms.
    pub fn eval_matrix(&self, points: &[[f64; 3]]) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(points.len() * d, self.len());
        for (p, t) in points.iter().enumerate() {
            for (s, term) in self.terms.iter().enumerate() {
                let v = term.eval(t);
                for j in 0..d {
                    m[(p * d + j, s)] = v[j];
                }
            }
        }
        m
    }
}

/// Numerical rank with relative threshold `tol * σ_max`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// 2-norm condition number of a square matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    smax / smin
}

/// Monomial exponents of `Π_a P^{deg[a]}(t_a)` in lexicographic order, last
/// axis fastest.
pub fn tensor_exponents(dim: usize, deg: [u32; 3]) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for e0 in 0..=deg[0] {
        for e1 in 0..=deg[1] {
            let top = if dim == 3 { deg[2] } else { 0 };
            for e2 in 0..=top {
                out.push([e0, e1, e2]);
            }
        }
    }
    out
}

/// Raviart-Thomas space of index `r` on `[-1,1]^d`: component `j` spans
/// `P^{r+1}(t_j) ⊗ Q^r(others)`.
pub fn rt_span(dim: usize, r: u32) -> PolySpan {
    let mut terms = Vec::new();
    for j in 0..dim {
        let mut deg = [r; 3];
        deg[j] = r + 1;
        for e in tensor_exponents(dim, deg) {
            let mut v = VecPoly::default();
            v.comps[j] = Poly::monomial(1.0, e);
            terms.push(v);
        }
    }
    PolySpan { dim, terms }
}

/// Divergence-free bubble enrichment `B̃^k`. Family `i` consists of
/// `t^{e - 1_i} ((Σ_{m≠i} e_m + d - 1) t_i 1_i - e_i Σ_{m≠i} t_m 1_m)` over
/// exponents `0 <= e <= k` in which some `e_m`, `m ≠ i`, equals `k`.
pub fn bubble_span(dim: usize, k: u32) -> PolySpan {
    let mut terms = Vec::new();
    for i in 0..dim {
        for e in tensor_exponents(dim, [k; 3]) {
            if !(0..dim).any(|m| m != i && e[m] == k) {
                continue;
            }
            let mut v = VecPoly::default();
            let lead: u32 = (0..dim).filter(|&m| m != i).map(|m| e[m]).sum::<u32>() + dim as u32 - 1;
            v.comps[i] = Poly::monomial(lead as f64, e);
            if e[i] > 0 {
                for m in (0..dim).filter(|&m| m != i) {
                    let mut em = e;
                    em[i] -= 1;
                    em[m] += 1;
                    v.comps[m] = Poly::monomial(-(e[i] as f64), em);
                }
            }
            terms.push(v);
        }
    }
    PolySpan { dim, terms }
}

/// Enhanced space `V̂^k = RT_{k-1} ⊕ B̃^k`.
pub fn enhanced_span(dim: usize, k: u32) -> PolySpan {
    assert!(k >= 1);
    rt_span(dim, k - 1).concat(bubble_span(dim, k))
}

pub fn rt_dimension(dim: usize, r: usize) -> usize {
    dim * (r + 1).pow(dim as u32 - 1) * (r + 2)
}
