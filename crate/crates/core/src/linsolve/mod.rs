//! Sparse kernels, Krylov solver, multigrid and dense validation tools.

mod dense;
mod gmres;
mod multigrid;
mod sparse;

pub use dense::{dense_solve, dense_spectrum, BandedLu, DenseLu, SPECTRUM_SIZE_CAP};
pub use gmres::{gmres, GmresOptions, Identity, LinearOperator, SolverReport, SolverStatus};
pub use multigrid::{build_hierarchy, CoarseOperator, MultigridHierarchy, MultigridOptions, Smoother};
pub use sparse::{CsrMatrix, SparseComplexMatrix};
