//! Matrix-free geometric multigrid for the stabilized P1-P1 Stokes system on
//! block-structured tetrahedral grids.

pub mod error;
pub mod fields;
pub mod krylov;
pub mod mesh;
pub mod metrics;
pub mod multigrid;
pub mod operators;
pub mod problem;
pub mod smoothers;
pub mod solvers;

pub use error::{Error, Result};
pub use fields::StokesVector;
pub use mesh::{BoundaryTag, CoarseMesh, GridHierarchy, GridLevel};
pub use operators::{Formulation, OperatorTag, StokesOperators};
pub use problem::ManufacturedSolution;
pub use solvers::{solve, RunResult, SolverConfig, SolverKind};
