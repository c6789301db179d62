//! Concrete even spectral triples: seeded random matrix triples (optionally with a
//! weighted centre), the flat torus with a rank-one Bott-type projection, and the even
//! circle.

pub mod circle;
pub mod grid;
pub mod random;
pub mod torus;

use crate::algebra::BlockOperator;
use crate::triple::EvenTriple;

pub use circle::CircleModel;
pub use grid::{FlatResidues, GridField};
pub use random::{ComposableCorners, RandomBlockSpec, RandomEvenModel};
pub use torus::TorusModel;

/// A built triple with its distinguished projection and the index it was built to have.
#[derive(Clone, Debug)]
pub struct ModelInstance {
    pub id: String,
    pub triple: EvenTriple,
    pub p: BlockOperator,
    pub expected_index: f64,
}
