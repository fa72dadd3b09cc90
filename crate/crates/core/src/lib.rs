//! Bound-preserving finite elements for symmetric tensor-valued
//! convection–diffusion on triangular meshes.

pub mod analysis;
pub mod assembly;
pub mod element;
pub mod error;
pub mod mesh2d;
pub mod problems;
pub mod runner;
pub mod sparse;
pub mod system;
pub mod tensor3;
pub mod visolver;

pub use error::{Error, Result};
pub use mesh2d::{NodalTensorField, TriMesh};
pub use tensor3::{Bounds, SymTensor3};
