//! Reconstructed discontinuous approximation (RDA) for the 2D Helmholtz
//! equation `-Δu - (k² - iε)u = f` on the unit square with impedance
//! boundary conditions.
//!
//! One unknown per triangle; degree-`m` polynomials are recovered from
//! element patches by constrained least squares and plugged into an
//! interior-penalty DG form. Linear systems are solved with GMRES
//! preconditioned by a multigrid V-cycle on the lowest-order operator.
//!
//! Everything numeric is generic over [`scalar::Real`]; the aliases below
//! fix `f64`.

// Dense kernels index several arrays in lockstep, and `!(x > 0)` style
// checks are there to reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod experiments;
pub mod linsolve;
pub mod mesh;
pub mod polybasis;
pub mod reconstruction;
pub mod scalar;

pub use error::{Error, Result};

pub type Mesh = mesh::TriMesh<f64>;
pub type Reconstruction = reconstruction::ReconstructionOperator<f64>;
pub type Config = assembly::HelmholtzConfig<f64>;
pub type Solution = assembly::ManufacturedSolution<f64>;
pub type System = assembly::GlobalSystem<f64>;
pub type Errors = assembly::ErrorReport<f64>;
pub type ComplexMatrix = linsolve::SparseComplexMatrix<f64>;
pub type Multigrid = linsolve::MultigridHierarchy<f64>;
pub type BrokenPolynomial = polybasis::PiecewisePolynomial<f64, num_complex::Complex<f64>>;
pub type Complex64 = num_complex::Complex<f64>;
