//! Instance generators, a Monte-Carlo trial driver and file formats for the
//! mixture testers in `mixtest-core`.

pub mod distfile;
pub mod error;
pub mod generators;
pub mod trials;

pub use error::{HarnessError, Result};
pub use trials::{run_trials, Instance, InstanceSpec, TesterKind, TrialRecord, TrialReport, TrialRun};
