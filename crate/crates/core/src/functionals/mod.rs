//! Equivalence invariants of graphons: degree and level functionals, their
//! push-forward laws, degree-conditional means and homomorphism densities.

mod distribution;
mod hom;
mod profile;

pub use distribution::{Atom, EmpiricalDistribution, JointDistribution, DIST_FORMAT};
pub use hom::{
    hom_density, hom_density_exact, HomEstimate, HomMode, SmallGraph, EXACT_HOM_BUDGET,
    MAX_PATTERN_VERTICES,
};
pub use profile::{
    conditional_h_given_degree, conditional_mass, degree, degree_law, degree_quadrature,
    joint_law, joint_law_of, level_functional, level_functional_counting, level_law,
    read_profile_csv, read_profile_json, BinMean, ConditionalReport, DegreeProfile, LevelProfile,
    DEFAULT_RESOLUTION, PROFILE_FORMAT,
};
