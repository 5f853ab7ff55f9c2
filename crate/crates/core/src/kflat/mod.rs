//! Identity testing against mixtures of a known distribution `q` with
//! unknown noise that is constant on each of `k` intervals.
//!
//! The domain is grouped into buckets of near-equal `q`-probability;
//! intersecting buckets with candidate intervals gives cells on which a valid
//! mixture restricts to a near-uniform distribution. A dynamic program over
//! interval endpoints then searches for a mixture parameter and a flat
//! function matching the coarsened empirical distribution, ruling out any
//! interval containing a cell that fails a uniformity test.
//!
//! Memory and time grow quadratically in `n` (one table entry per interval).

mod bucketing;
mod division;
mod family;
mod fit;
mod tester;
mod uniformity;

pub use bucketing::{bucket, Bucket, Bucketing};
pub use division::{build_division, coarsened_empirical, Cell, CellRef, Division, Segmentation};
pub use family::{distance_to_kflat_family, KFlatDistance};
pub use fit::{alpha_grid, exhaustive_kflat_search, fit_kflat_dp, search_kflat_dp, FitSearch, KFlatFit};
pub use tester::{kflat_budget, kflat_identity_test, kflat_identity_test_with, KFlatBudget, KFlatConfig};
pub use uniformity::{collision_estimate, uniformity_subtest, uniformity_subtest_with, DEFAULT_UNIFORMITY_CONSTANT};
