//! Stationary compressible Navier-Stokes flow with inflow boundary data:
//! perturbation solver around the constant flow `([1, 0], 1)` and numerical
//! checks of the estimates behind its well-posedness.

pub mod boundary;
pub mod diff;
pub mod error;
pub mod expr;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod momentum;
pub mod oracle;
pub mod picard;
pub mod quad;
pub mod report;
pub mod scenario;
pub mod sparse;
pub mod transport;

pub use error::{Error, Result};
