//! Numerical laboratory for the spherical Hall algebra of compactified
//! Spec(Z): lattice bundles and their Hall product, Mellin transforms and
//! constant terms, zeta-kernel shuffle algebras, and perturbed permutohedra.

pub mod error;
pub mod quad;
pub mod specfun;

pub mod ch;
pub mod cli;
pub mod lattice;
pub mod mellin;
pub mod permutohedron;
pub mod qforms;
pub mod shuffle;

pub use error::{Error, Result};
pub use num_complex::Complex64;
