//! Augmented-Lagrangian finite element solver for 2D incompressible
//! viscoresistive MHD in the B–E formulation.

pub mod assembly;
pub mod driver;
pub mod error;
pub mod femspace;
pub mod linalg;
pub mod mesh;
pub mod multigrid;
pub mod precond;
pub mod quadrature;

pub use error::{Error, Result};
