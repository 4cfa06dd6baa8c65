//! Matrix models: atoms, variance profiles and seeded sampling.

mod atom;
mod profile;
mod sample;
mod spec;

pub use atom::{truncate_atom, truncation_level, AtomFamily, AtomSpec};
pub use profile::{
    build_variance_profile, check_doubly_stochastic, random_doubly_stochastic, DoublyStochasticReport,
    VarianceProfile, EXPLICIT_PROFILE_TOL,
};
pub use sample::{sample_matrix, sample_with_profile, trial_seed, SampledMatrix};
pub use spec::{EnsembleKind, EnsembleSpec};
