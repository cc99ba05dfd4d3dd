//! Contracted generalized polarization tensors (CGPTs) of planar conductivity
//! targets: boundary integral computation, transform algebra, invariant
//! descriptors, simulated electro-sensing and dictionary classification.

pub mod boundary_ops;
pub mod cgpt_algebra;
pub mod cgpt_engine;
pub mod dictionary;
pub mod error;
pub mod geometry;
pub mod invariants;
pub mod linalg;
pub mod reconstruction;
pub mod sensing_sim;

pub use error::{Error, Result};
