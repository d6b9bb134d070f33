//! Shared fixtures for the criterion benchmarks.

use stokes_core::mesh::{refine_hierarchy, CoarseMesh, GridHierarchy};
use stokes_core::problem::homogeneous_problem;
use stokes_core::solvers::initial_guess;
use stokes_core::{Formulation, StokesOperators, StokesVector};

/// Unit-cube hierarchy refined to `level`.
pub fn cube(level: usize) -> GridHierarchy {
    refine_hierarchy(&CoarseMesh::unit_cube(), level).expect("unit cube refines")
}

/// Zero right-hand side and the default random start on the finest level.
pub fn zero_problem(ops: &StokesOperators) -> (StokesVector, StokesVector) {
    let l = ops.finest();
    (homogeneous_problem(ops, l).rhs, initial_guess(ops, l, 0))
}

pub fn operators(h: &GridHierarchy, form: Formulation) -> StokesOperators<'_> {
    StokesOperators::new(h, form, 1.0).expect("operators assemble")
}
