//! Numerical laboratory for graphons on [0, 1].
//!
//! Graphons are represented in closed form ([`graphon::AnalyticGraphon`]),
//! as symmetric step grids ([`graphon::GridGraphon`]), or as lazy
//! pull-backs along measure-preserving maps. On top of that the crate
//! computes equivalence invariants (degree laws, the level functional,
//! homomorphism densities, cut-norm bounds) and runs a step-by-step check
//! that a specific graphon has no equivalent version with a weakly
//! increasing degree function.

pub mod error;
pub mod functionals;
pub mod graphon;
pub mod metrics;
pub mod numeric;
pub mod sample;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
