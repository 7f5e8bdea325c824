//! Radial problem on the unit ball: shooting in the center value, branch
//! tracing, the extremal parameter and the linearized first eigenvalue.

mod branch;
mod eigen;
mod levels;
pub mod ode;
mod shooting;
mod solution;
pub mod special;

pub use branch::{
    branch_point, extremal_parameter, extremal_supremum, solution_at_lambda, trace_branch, Branch, BranchGap,
    BranchOptions, BranchPoint, Extremal,
};
pub use eigen::{
    eigen_grid, linearized_eigenvalue, linearized_operator, EigenGrid, EigenOptions, RadialEigen, CORE_NODES,
};
pub use levels::{radial_identity_sides, radial_level_quantities, radial_profiles, RadialLevel};
pub use shooting::{solve_shooting, ShootingOptions};
pub use solution::RadialSolution;
