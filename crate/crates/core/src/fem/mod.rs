//! Piecewise-linear finite elements on Kuhn-subdivided box meshes.

pub mod load;
pub mod mesh;
pub mod space;
pub mod transfer;

pub use load::{BodyLoad, DirichletProgram, LoadProgram, TimeProgram, TractionLoad, VectorField};
pub use mesh::{BoxMesh, Side};
pub use space::{DofVector, FeSpace};
pub use transfer::{galerkin_project, interp_constrained, Prolongation};
