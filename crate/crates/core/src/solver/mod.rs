//! Local velocity elimination, the reduced pressure system and the Krylov
//! solvers.

mod blocks;
mod cg;
mod reduce;
mod rt;
mod stats;

pub use blocks::{factorize_blocks, FactorizedBlocks};
pub use cg::{pcg, solve_cg, PcgOutcome};
pub use reduce::{recover_velocity, reduce, saddle_residuals, ReducedSystem};
pub use rt::solve_rt_schur;
pub use stats::SolveStats;
