//! Monolithic solver for 2D fluid-structure interaction.
//!
//! The crate couples a nonlinear elastodynamic solid (St.-Venant-Kirchhoff,
//! generalized-alpha time integration) with incompressible Navier-Stokes on a
//! moving mesh (ALE, stabilized equal-order elements, generalized-alpha or
//! one-step-theta) through a dual-mortar interface that admits non-matching
//! grids. The coupled Newton system is solved monolithically; the Lagrange
//! multipliers and the slave interface degrees of freedom are condensed out,
//! with either field acting as mortar master.

pub mod ale;
pub mod cases;
pub mod coupling;
pub mod dofmap;
pub mod dual;
pub mod error;
pub mod fluid;
pub mod linalg;
pub mod mesh;
pub mod monolithic;
pub mod mortar;
pub mod solid;
pub mod studies;

pub use error::{FsiError, Result};
