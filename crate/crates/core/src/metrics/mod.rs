//! Distances between step graphons: L¹/L², the cut norm of a signed step
//! kernel, cut-distance upper bounds over block relabelings and
//! invariant-based lower bounds.

mod cutnorm;
mod distance;

pub use cutnorm::{cut_norm, CutNormMethod, CutNormResult, StepKernel, MAX_EXHAUSTIVE_CUT_N};
pub use distance::{
    cut_distance_upper, invariant_lower_bound, l1_distance, l2_distance, CutDistanceMethod,
    CutDistanceResult, InvariantBound, InvariantTerm, MAX_EXHAUSTIVE_PERM_N,
};
