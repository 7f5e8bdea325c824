//! Finite-difference solutions of `-Δu = λ f(u)` on convex planar domains.

pub mod domain;
pub mod field;
pub mod gradient;
pub mod multigrid;
pub mod shape;
pub mod solver;

pub use domain::DomainMask;
pub use field::{FieldHeader, ScalarField2D, TestFunction2D};
pub use gradient::{gradient_equation_residual, hessian_identity_error, hessian_identity_sides};
pub use shape::Shape;
pub use solver::{
    linearized_eigenpair_2d, linearized_eigenvalue_2d, minimal_branch_2d, quadratic_form, solve_newton,
    solve_newton_with, BranchOptions2D, EigenOptions2D, NewtonOptions, NewtonReport, PlanarBranch, PlanarBranchPoint,
    Preconditioning,
};
