//! Manufactured solutions, error norms and convergence rates.

use nalgebra::{Cholesky, DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;

use crate::assembly::CoefficientField;
use crate::dofmap::DofMap;
use crate::error::{MfmfeError, Result};
use crate::mesh::Mesh;
use crate::postprocess::{local_velocity, velocity_at, PostprocessedPressure};
use crate::quadrature::{gauss_rule, tensor_rule};
use crate::refbasis::{PressureBasis, VelocityElement};

type ScalarFn = fn(&Vector3<f64>) -> f64;
type VectorFn = fn(&Vector3<f64>) -> Vector3<f64>;
type MatrixFn = fn(&Vector3<f64>) -> Matrix3<f64>;

/// Analytic pressure and permeability with hand-derived derivatives.
/// `div_k[j] = Σ_i ∂_i K_ij`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub dim: usize,
    p: ScalarFn,
    grad_p: VectorFn,
    hess_p: MatrixFn,
    k: MatrixFn,
    div_k: VectorFn,
}

fn mask_vec(dim: usize, mut v: Vector3<f64>) -> Vector3<f64> {
    if dim == 2 {
        v[2] = 0.0;
    }
    v
}

fn mask_mat(dim: usize, mut m: Matrix3<f64>) -> Matrix3<f64> {
    if dim == 2 {
        for i in 0..2 {
            m[(i, 2)] = 0.0;
            m[(2, i)] = 0.0;
        }
        m[(2, 2)] = 1.0;
    }
    m
}

impl ManufacturedCase {
    /// 2d: `p = x³y⁴ + x² + sin(xy)cos(xy)` with a full variable tensor.
    pub fn example1() -> ManufacturedCase {
        ManufacturedCase {
            name: "example1",
            dim: 2,
            p: |x| {
                let (a, b) = (x[0], x[1]);
                a.powi(3) * b.powi(4) + a * a + 0.5 * (2.0 * a * b).sin()
            },
            grad_p: |x| {
                let (a, b) = (x[0], x[1]);
                let c2 = (2.0 * a * b).cos();
                Vector3::new(
                    3.0 * a * a * b.powi(4) + 2.0 * a + b * c2,
                    4.0 * a.powi(3) * b.powi(3) + a * c2,
                    0.0,
                )
            },
            hess_p: |x| {
                let (a, b) = (x[0], x[1]);
                let (s2, c2) = (2.0 * a * b).sin_cos();
                let xx = 6.0 * a * b.powi(4) + 2.0 - 2.0 * b * b * s2;
                let yy = 12.0 * a.powi(3) * b * b - 2.0 * a * a * s2;
                let xy = 12.0 * a * a * b.powi(3) + c2 - 2.0 * a * b * s2;
                Matrix3::new(xx, xy, 0.0, xy, yy, 0.0, 0.0, 0.0, 0.0)
            },
            k: |x| {
                let (a, b) = (x[0], x[1]);
                let s = (a * b).sin();
                Matrix3::new(
                    (a + 1.0).powi(2) + b * b,
                    s,
                    0.0,
                    s,
                    (a + 1.0).powi(2),
                    0.0,
                    0.0,
                    0.0,
                    1.0,
                )
            },
            div_k: |x| {
                let (a, b) = (x[0], x[1]);
                let c = (a * b).cos();
                Vector3::new(2.0 * (a + 1.0) + a * c, b * c, 0.0)
            },
        }
    }

    /// 3d: `p = x⁴y³ + x² + yz² + cos(xy) + sin z` with a full variable tensor.
    pub fn example2() -> ManufacturedCase {
        ManufacturedCase {
            name: "example2",
            dim: 3,
            p: |x| {
                let (a, b, c) = (x[0], x[1], x[2]);
                a.powi(4) * b.powi(3) + a * a + b * c * c + (a * b).cos() + c.sin()
            },
            grad_p: |x| {
                let (a, b, c) = (x[0], x[1], x[2]);
                let s = (a * b).sin();
                Vector3::new(
                    4.0 * a.powi(3) * b.powi(3) + 2.0 * a - b * s,
                    3.0 * a.powi(4) * b * b + c * c - a * s,
                    2.0 * b * c + c.cos(),
                )
            },
            hess_p: |x| {
                let (a, b, c) = (x[0], x[1], x[2]);
                let (s, co) = (a * b).sin_cos();
                let xx = 12.0 * a * a * b.powi(3) + 2.0 - b * b * co;
                let yy = 6.0 * a.powi(4) * b - a * a * co;
                let zz = 2.0 * b - c.sin();
                let xy = 12.0 * a.powi(3) * b * b - s - a * b * co;
                let yz = 2.0 * c;
                Matrix3::new(xx, xy, 0.0, xy, yy, yz, 0.0, yz, zz)
            },
            k: |x| {
                let (a, b, c) = (x[0], x[1], x[2]);
                let (s, co) = (a * b).sin_cos();
                Matrix3::new(
                    a * a + (b + 2.0).powi(2),
                    0.0,
                    co,
                    0.0,
                    c * c + 2.0,
                    s,
                    co,
                    s,
                    (b + 3.0).powi(2),
                )
            },
            div_k: |x| {
                let (a, b) = (x[0], x[1]);
                let (s, co) = (a * b).sin_cos();
                Vector3::new(2.0 * a, 0.0, -b * s + a * co)
            },
        }
    }

    /// Linear pressure with a constant anisotropic tensor; the discrete
    /// method reproduces it exactly.
    pub fn linear(dim: usize) -> ManufacturedCase {
        ManufacturedCase {
            name: "linear",
            dim,
            p: |x| 1.0 + 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[2],
            grad_p: |_| Vector3::new(2.0, -3.0, 0.5),
            hess_p: |_| Matrix3::zeros(),
            k: |_| Matrix3::new(2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 1.5),
            div_k: |_| Vector3::zeros(),
        }
    }

    pub fn pressure(&self, x: &Vector3<f64>) -> f64 {
        (self.p)(x)
    }

    pub fn pressure_gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        mask_vec(self.dim, (self.grad_p)(x))
    }

    /// `u = -K ∇p`.
    pub fn velocity(&self, x: &Vector3<f64>) -> Vector3<f64> {
        -self.permeability(x) * self.pressure_gradient(x)
    }

    /// `f = ∇·u = -(div K · ∇p + K : ∇²p)`.
    pub fn divergence(&self, x: &Vector3<f64>) -> f64 {
        let k = self.permeability(x);
        let h = mask_mat(self.dim, (self.hess_p)(x));
        let kh: f64 = (0..self.dim)
            .flat_map(|i| (0..self.dim).map(move |j| (i, j)))
            .map(|(i, j)| k[(i, j)] * h[(i, j)])
            .sum();
        -(mask_vec(self.dim, (self.div_k)(x)).dot(&self.pressure_gradient(x)) + kh)
    }
}

impl CoefficientField for ManufacturedCase {
    fn permeability(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        mask_mat(self.dim, (self.k)(x))
    }

    fn source(&self, x: &Vector3<f64>) -> f64 {
        self.divergence(x)
    }

    fn dirichlet(&self, x: &Vector3<f64>) -> f64 {
        self.pressure(x)
    }
}

pub const ERROR_NAMES: [&str; 6] = ["err_u", "err_div", "err_p", "err_pG", "err_qp", "err_pstar"];

/// Relative errors of one refinement level, in the order of [`ERROR_NAMES`].
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub case: String,
    pub k: usize,
    pub level: usize,
    pub h: f64,
    pub errors: [f64; 6],
    /// Observed rates against the previous level.
    pub rates: [Option<f64>; 6],
}

impl ErrorRecord {
    pub fn err_u(&self) -> f64 {
        self.errors[0]
    }
    pub fn err_div(&self) -> f64 {
        self.errors[1]
    }
    pub fn err_p(&self) -> f64 {
        self.errors[2]
    }
    pub fn err_pg(&self) -> f64 {
        self.errors[3]
    }
    pub fn err_qp(&self) -> f64 {
        self.errors[4]
    }
    pub fn err_pstar(&self) -> f64 {
        self.errors[5]
    }
}

/// Discrete solution on one mesh together with its spaces.
pub struct DiscreteSolution<'a, E: VelocityElement + ?Sized> {
    pub mesh: &'a Mesh,
    pub dofs: &'a DofMap,
    pub elem: &'a E,
    pub pressure: &'a PressureBasis,
    pub u: &'a [f64],
    pub p: &'a [f64],
    pub pstar: &'a PostprocessedPressure,
}

/// Squared errors and squared reference norms of one cell.
#[derive(Default, Clone, Copy)]
struct CellSums {
    err: [f64; 6],
    norm: [f64; 6],
}

/// Relative errors with `nq` Gauss points per axis for the `L²` norms and
/// the `k`-point pressure nodes for the discrete norm.
pub fn error_norms<E: VelocityElement + ?Sized>(
    sol: &DiscreteSolution<'_, E>,
    case: &ManufacturedCase,
    level: usize,
    nq: usize,
) -> Result<ErrorRecord> {
    let mesh = sol.mesh;
    let dim = mesh.dim();
    let rule = tensor_rule(&gauss_rule(nq)?.to_unit(), dim)?;
    let vt = sol.elem.tabulate(&rule.nodes);
    let pt = sol.pressure.tabulate(&rule.nodes);
    let np = sol.pressure.len();
    let pnodes = sol.pressure.nodes();

    let cells: Result<Vec<CellSums>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = mesh.geometry(c);
            let coef = local_velocity(sol.dofs, c, sol.u);
            let ph: Vec<f64> = (0..np).map(|q| sol.p[sol.dofs.pressure_dof(c, q)]).collect();
            let mut s = CellSums::default();
            let mut gram = DMatrix::zeros(np, np);
            let mut proj_rhs = DVector::zeros(np);
            for (q, (xh, w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                let mp = geom.map_point(xh)?;
                let wj = w * mp.jac;
                let (uh, divh) = velocity_at(&vt, q, &coef, &mp);
                let ue = case.velocity(&mp.x);
                let fe = case.divergence(&mp.x);
                let pe = case.pressure(&mp.x);
                let phi = &pt[q * np..(q + 1) * np];
                let phq: f64 = phi.iter().zip(&ph).map(|(a, b)| a * b).sum();
                s.err[0] += wj * (ue - uh).norm_squared();
                s.norm[0] += wj * ue.norm_squared();
                s.err[1] += wj * (fe - divh).powi(2);
                s.norm[1] += wj * fe * fe;
                s.err[2] += wj * (pe - phq).powi(2);
                s.norm[2] += wj * pe * pe;
                s.err[5] += wj * (pe - sol.pstar.eval(c, xh)).powi(2);
                s.norm[5] += wj * pe * pe;
                for a in 0..np {
                    proj_rhs[a] += wj * pe * phi[a];
                    for b in 0..np {
                        gram[(a, b)] += wj * phi[a] * phi[b];
                    }
                }
            }
            s.norm[4] = s.norm[2];
            let chol = Cholesky::new(gram.clone()).ok_or_else(|| MfmfeError::Geometry {
                cell: c,
                reason: "singular pressure Gramian".into(),
            })?;
            let diff = chol.solve(&proj_rhs) - DVector::from_column_slice(&ph);
            s.err[4] = diff.dot(&(&gram * &diff)).max(0.0);
            for (q, (xh, w)) in pnodes.nodes.iter().zip(&pnodes.weights).enumerate() {
                let mp = geom.map_point(xh)?;
                let pe = case.pressure(&mp.x);
                s.err[3] += w * mp.jac * (pe - ph[q]).powi(2);
                s.norm[3] += w * mp.jac * pe * pe;
            }
            Ok(s)
        })
        .collect();
    let mut tot = CellSums::default();
    for s in cells? {
        for i in 0..6 {
            tot.err[i] += s.err[i];
            tot.norm[i] += s.norm[i];
        }
    }
    let mut errors = [0.0; 6];
    for i in 0..6 {
        errors[i] = if tot.norm[i] > 0.0 {
            (tot.err[i] / tot.norm[i]).sqrt()
        } else {
            tot.err[i].sqrt()
        };
    }
    Ok(ErrorRecord {
        case: case.name.to_string(),
        k: sol.pressure.k(),
        level,
        h: mesh.nominal_h(),
        errors,
        rates: [None; 6],
    })
}

/// Fills the rates `log(e_{l-1}/e_l) / log(h_{l-1}/h_l)`.
pub fn rates(records: &mut [ErrorRecord]) -> Result<()> {
    if let Some(first) = records.first() {
        let (case, k) = (first.case.clone(), first.k);
        if records.iter().any(|r| r.case != case || r.k != k) {
            return Err(MfmfeError::InvalidArgument("records mix cases or orders".into()));
        }
    }
    if let Some(r) = records.first_mut() {
        r.rates = [None; 6];
    }
    for l in 1..records.len() {
        let (prev, cur) = (&records[l - 1], &records[l]);
        let hr = (prev.h / cur.h).ln();
        let mut rs = [None; 6];
        for (i, r) in rs.iter_mut().enumerate() {
            *r = Some((prev.errors[i] / cur.errors[i]).ln() / hr);
        }
        records[l].rates = rs;
    }
    Ok(())
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_rate(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Least-squares rate of each error column.
pub fn fitted_rates(records: &[ErrorRecord]) -> [f64; 6] {
    let h: Vec<f64> = records.iter().map(|r| r.h).collect();
    let mut out = [0.0; 6];
    for (i, o) in out.iter_mut().enumerate() {
        let e: Vec<f64> = records.iter().map(|r| r.errors[i]).collect();
        *o = fitted_rate(&h, &e);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_check(case: &ManufacturedCase) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eps = 1e-5;
        for _ in 0..20 {
            let mut x = Vector3::new(
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1.0),
            );
            if case.dim == 2 {
                x[2] = 0.0;
            }
            let mut div = 0.0;
            for i in 0..case.dim {
                let mut e = Vector3::zeros();
                e[i] = eps;
                let g = (case.pressure(&(x + e)) - case.pressure(&(x - e))) / (2.0 * eps);
                assert!((g - case.pressure_gradient(&x)[i]).abs() < 1e-6 * (1.0 + g.abs()));
                div += (case.velocity(&(x + e))[i] - case.velocity(&(x - e))[i]) / (2.0 * eps);
            }
            let f = case.divergence(&x);
            assert!((div - f).abs() < 1e-6 * (1.0 + f.abs()), "{div} vs {f}");
            let r = case.velocity(&x) + case.permeability(&x) * case.pressure_gradient(&x);
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn manufactured_cases_are_consistent() {
        fd_check(&ManufacturedCase::example1());
        fd_check(&ManufacturedCase::example2());
        fd_check(&ManufacturedCase::linear(2));
        fd_check(&ManufacturedCase::linear(3));
    }

    #[test]
    fn permeabilities_are_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for case in [ManufacturedCase::example1(), ManufacturedCase::example2()] {
            for _ in 0..50 {
                let x = Vector3::new(
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.0..1.0),
                );
                let k = case.permeability(&x);
                assert!(k.symmetric_eigenvalues().min() > 0.0);
            }
        }
    }

    fn record(h: f64, e: f64) -> ErrorRecord {
        ErrorRecord {
            case: "c".into(),
            k: 2,
            level: 0,
            h,
            errors: [e; 6],
            rates: [None; 6],
        }
    }

    #[test]
    fn rate_examples() {
        let mut r = vec![record(0.25, 1e-2), record(0.125, 2.5e-3)];
        rates(&mut r).unwrap();
        assert!(r[0].rates[0].is_none());
        assert!((r[1].rates[0].unwrap() - 2.0).abs() < 1e-12);
        let mut r = vec![record(0.5, 8e-3), record(0.25, 1e-3)];
        rates(&mut r).unwrap();
        assert!((r[1].rates[3].unwrap() - 3.0).abs() < 1e-12);
        let mut r = vec![record(0.5, 1e-3), record(0.25, 1e-3)];
        rates(&mut r).unwrap();
        assert_eq!(r[1].rates[5], Some(0.0));
    }

    #[test]
    fn mixed_records_are_rejected() {
        let mut a = record(0.5, 1.0);
        a.k = 3;
        assert!(rates(&mut [record(1.0, 1.0), a]).is_err());
    }

    #[test]
    fn fitted_rate_of_power_law() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
        assert!((fitted_rate(&h, &e) - 2.5).abs() < 1e-12);
    }
}
