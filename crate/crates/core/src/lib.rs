//! Matched-asymptotic construction and error solve for steady viscous flow
//! outside a rotating disc.
pub mod assembly;
pub mod batchelor_wood;
pub mod cli;
pub mod error;
pub mod error_solver;
pub mod euler_hierarchy;
pub mod field_core;
pub mod prandtl;
pub use error::{Error, Result};
