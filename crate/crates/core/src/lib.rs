//! Multipoint flux mixed finite elements of arbitrary order for Darcy flow
//! on quadrilateral and hexahedral meshes.

// index loops mirror the tensor formulas they implement
#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod dofmap;
pub mod error;
pub mod mesh;
pub mod pipeline;
pub mod postprocess;
pub mod quadrature;
pub mod refbasis;
pub mod solver;
pub mod sparse;
pub mod verify;

pub use error::{MfmfeError, Result};
