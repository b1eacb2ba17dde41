//! Rate-independent shape-memory evolution.
//!
//! The crate covers the single-material-point incremental problem, its
//! finite-element counterpart on box meshes, and studies of the limits in
//! the regularization, gradient, time-step and mesh parameters.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod asymptotics;
pub mod bvp;
pub mod constitutive;
pub mod dissipation;
pub mod energy;
pub mod error;
pub mod fem;
pub mod io;
pub mod solver;
pub mod tensor;

pub use constitutive::{PointState, PointTrajectory, StressPath, TimeGrid};
pub use dissipation::DissipationSpec;
pub use energy::{ExtReal, MaterialParams};
pub use error::{Error, Result};
pub use tensor::{DevTensor3, Elasticity, SymTensor3};
