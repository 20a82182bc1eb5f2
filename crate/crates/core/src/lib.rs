//! Adversarially trained linear regression under ℓ∞ and weighted group
//! perturbations: objectives, solvers, tuning rules and error diagnostics.

pub mod analysis;
pub mod data;
pub mod error;
pub mod harness;
pub mod io;
pub mod norms;
pub mod objective;
pub mod solver;
pub mod tuning;

pub use data::{Dataset, GroundTruth, GroupPartition};
pub use error::{Error, Result};
pub use objective::{AdvObjective, Variant};
pub use solver::{fit, FitResult, SolverOptions};
