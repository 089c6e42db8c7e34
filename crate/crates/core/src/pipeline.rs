//! End-to-end solve of a manufactured case on one mesh.

use std::time::Instant;

use crate::assembly::{assemble_div, assemble_mass_blocks, assemble_rhs, assemble_rt_mass};
use crate::dofmap::{DofMap, NodeBlocks};
use crate::error::{MfmfeError, Result};
use crate::mesh::Mesh;
use crate::postprocess::postprocess;
use crate::refbasis::{NodalBasis, PressureBasis, RtElement, VelocityElement};
use crate::solver::{factorize_blocks, recover_velocity, reduce, solve_cg, solve_rt_schur, SolveStats};
use crate::verify::{error_norms, DiscreteSolution, ErrorRecord, ManufacturedCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Multipoint flux mixed method with local velocity elimination.
    Mfmfe,
    /// Raviart-Thomas `RT_{k-1}` with exact quadrature and a global Schur solve.
    Rt,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub method: Method,
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Gauss points per axis for right-hand sides, postprocessing and
    /// norms; defaults to `k + 3`.
    pub quad_order: Option<usize>,
}

impl RunOptions {
    pub fn new(method: Method, k: usize) -> RunOptions {
        RunOptions {
            method,
            k,
            tol: 1e-12,
            max_iter: 100_000,
            quad_order: None,
        }
    }

    pub fn quad_points(&self) -> usize {
        self.quad_order.unwrap_or(self.k + 3)
    }
}

#[derive(Debug, Clone)]
pub struct LevelResult {
    pub record: ErrorRecord,
    pub stats: SolveStats,
    pub num_velocity: usize,
    pub num_pressure: usize,
}

/// Assembles, solves, postprocesses and measures errors on one mesh.
/// `stats.assemble_seconds` covers assembly and local elimination,
/// `stats.solve_seconds` the Krylov solve and velocity recovery.
pub fn solve_level(mesh: &Mesh, case: &ManufacturedCase, level: usize, opts: &RunOptions) -> Result<LevelResult> {
    if mesh.dim() != case.dim {
        return Err(MfmfeError::InvalidArgument(format!(
            "{} is a {}d case but the mesh is {}d",
            case.name,
            case.dim,
            mesh.dim()
        )));
    }
    if opts.k < 1 {
        return Err(MfmfeError::InvalidArgument("k must be at least 1".into()));
    }
    let dim = mesh.dim();
    let nq = opts.quad_points();
    let pressure = PressureBasis::new(dim, opts.k)?;
    match opts.method {
        Method::Mfmfe => {
            let basis = NodalBasis::new(dim, opts.k)?;
            let t0 = Instant::now();
            let dofs = DofMap::new(mesh, &basis)?;
            let blocks = NodeBlocks::new(mesh, &basis, &dofs);
            let a = assemble_mass_blocks(mesh, &dofs, &blocks, &basis, case)?;
            let d = assemble_div(mesh, &dofs, &basis, &pressure)?;
            let (g, f) = assemble_rhs(mesh, &dofs, &basis, &pressure, case, nq)?;
            let factors = factorize_blocks(&a)?;
            let red = reduce(&factors, &d, &g, &f);
            let assemble_seconds = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let (p, stats) =
                solve_cg(&red.s, &red.rhs, opts.tol, opts.max_iter).map_err(|e| with_time(e, assemble_seconds))?;
            let u = recover_velocity(&factors, &d, &g, &p);
            let stats = SolveStats {
                assemble_seconds,
                solve_seconds: t1.elapsed().as_secs_f64(),
                ..stats
            };
            finish(mesh, &dofs, &basis, &pressure, &u, &p, case, level, nq, stats)
        }
        Method::Rt => {
            let elem = RtElement::new(dim, opts.k - 1)?;
            let t0 = Instant::now();
            let dofs = DofMap::new_rt(mesh, &elem)?;
            let a = assemble_rt_mass(mesh, &dofs, &elem, case, nq)?;
            let d = assemble_div(mesh, &dofs, &elem, &pressure)?;
            let (g, f) = assemble_rhs(mesh, &dofs, &elem, &pressure, case, nq)?;
            let assemble_seconds = t0.elapsed().as_secs_f64();
            let (u, p, stats) =
                solve_rt_schur(&a, &d, &g, &f, opts.tol, opts.max_iter).map_err(|e| with_time(e, assemble_seconds))?;
            let stats = SolveStats {
                assemble_seconds,
                ..stats
            };
            finish(mesh, &dofs, &elem, &pressure, &u, &p, case, level, nq, stats)
        }
    }
}

fn with_time(e: MfmfeError, assemble_seconds: f64) -> MfmfeError {
    match e {
        MfmfeError::Convergence { stats } => MfmfeError::Convergence {
            stats: SolveStats {
                assemble_seconds,
                ..stats
            },
        },
        other => other,
    }
}

#[allow(clippy::too_many_arguments)]
fn finish<E: VelocityElement + ?Sized>(
    mesh: &Mesh,
    dofs: &DofMap,
    elem: &E,
    pressure: &PressureBasis,
    u: &[f64],
    p: &[f64],
    case: &ManufacturedCase,
    level: usize,
    nq: usize,
    stats: SolveStats,
) -> Result<LevelResult> {
    let pstar = postprocess(mesh, dofs, elem, pressure, u, p, case, nq)?;
    let sol = DiscreteSolution {
        mesh,
        dofs,
        elem,
        pressure,
        u,
        p,
        pstar: &pstar,
    };
    let record = error_norms(&sol, case, level, nq)?;
    Ok(LevelResult {
        record,
        stats,
        num_velocity: dofs.num_velocity(),
        num_pressure: dofs.num_pressure(),
    })
}
