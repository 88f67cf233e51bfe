//! Sparse and dense linear algebra, Krylov solvers.

pub mod dense;
pub mod krylov;
pub mod sparse;

pub use dense::{DenseMatrix, LuFactor};
pub use krylov::{fgmres, gmres, KrylovConfig, KrylovReport};
pub use sparse::{CsrMatrix, TripletBuilder};
