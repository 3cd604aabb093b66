//! Numerical toolkit for finite arbitrarily varying quantum channels.
//!
//! The crate builds small channel families, decides how close they come to
//! being symmetrizable, certifies entanglement-breaking members of their
//! convex hulls, bounds capacities from below, and quantifies how much shared
//! randomness and blocklength a reliable code over such a family needs.
//! Everything is deterministic given the seeds passed in, and all numerics
//! are dense and dimension-guarded: the intended regime is input and output
//! dimensions up to 9 (tensor powers up to 81).

pub mod avqc;
pub mod capacities;
pub mod channels;
pub mod error;
pub mod finite_resources;
pub mod linalg;
pub mod optim;
pub mod sampling;

pub use error::{Error, Result};
