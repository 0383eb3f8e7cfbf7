//! Numerical tools for concentration in nonlocal selection-mutation
//! equations: the parabolic density solver, the constrained
//! Hamilton-Jacobi solver, closed-form reference solutions and diagnostics.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod hj;
pub mod init;
pub mod model;
pub mod multi_env;
pub mod oracle;
pub mod pde;
pub mod poly;
pub mod roots;
pub mod series;
pub mod tridiag;

pub use error::{Error, Result};
pub use grid::Grid;
pub use model::GrowthModel;
