//! Minimal, semi-stable and extremal solutions of `-Δu = λ g(u)` with zero
//! Dirichlet data, and numeric audits of the level-set inequalities that
//! bound them in low dimensions.

// `!(x > 0.0)` style guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod error;
pub mod levelgeom;
pub mod linalg;
pub mod nonlinearity;
pub mod par;
pub mod planar;
pub mod radial;
pub mod report;
pub mod verify;

pub use error::{LabError, Result};
pub use nonlinearity::Nonlinearity;
