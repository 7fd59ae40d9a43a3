//! Sparse/dense linear algebra: CSR storage, restarted GMRES with ILU(0)
//! preconditioning, and a dense LU fallback used as verification oracle on
//! tiny systems.

mod dense;
mod gmres;
mod ilu;
mod sparse;

pub use dense::{dense_lu_solve, DenseMatrix};
pub use gmres::{gmres_solve, LinearMethod, LinearSolverConfig, SolveStats};
pub use ilu::{BlockIlu0, Ilu0, NoPrecond, Preconditioner};
pub use sparse::{CsrMatrix, Triplets};
