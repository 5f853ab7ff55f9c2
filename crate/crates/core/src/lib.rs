//! Sublinear-sample testers for membership in two-component mixture families
//! of discrete distributions.
//!
//! Elements of a domain of size `n` are indexed `0..n`. The three testers are
//! [`identity::identity_test_known_noise`] (both components known),
//! [`closeness::closeness_test`] (components available only through
//! samples) and [`kflat::kflat_identity_test`] (one known component mixed
//! with unknown piecewise-constant noise).

pub mod closeness;
pub mod dist;
pub mod error;
pub mod identity;
pub mod kflat;
pub mod learner;
pub mod reshape;
pub mod sampling;
pub mod verdict;

pub use dist::{
    coarsen, distance_to_mixture_family, l1_distance, l2_distance_sq, lp_distance, make_distribution,
    mix, restrict, restricted_l1, CountVector, Distribution, MixtureWeight, Norm, Partition,
};
pub use error::{Error, Result};
pub use sampling::{derive_seed, poisson_sample, sample, seeded_rng, DistSource, SampleSource, SeededRng};
pub use verdict::Verdict;
