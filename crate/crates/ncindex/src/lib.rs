//! Numerical verification engine for the even local index formula in semifinite
//! spectral triples.
//!
//! The crate realizes a semifinite von Neumann algebra as a weighted direct sum of
//! matrix blocks, implements skew-corner Fredholm theory and the McKean–Singer formula,
//! and evaluates the resolvent cocycle, residue cocycle and zeta-function residues so
//! that every step from the spectral flow picture to the local formula can be checked
//! either exactly (matrix scale) or numerically (truncated geometric models).

pub mod algebra;
pub mod cocycle;
pub mod constants;
pub mod error;
pub mod fredholm;
pub mod linalg;
pub mod models;
pub mod psido;
pub mod quad;
pub mod special;
pub mod triple;
pub mod zeta;

pub use algebra::{BlockOperator, SpectralDecomposition, TracedAlgebra};
pub use error::{Error, Result};
pub use linalg::{c64, CMat};
