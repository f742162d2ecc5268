//! Scenario-driven front end to `capdrop-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod convert;
mod error;
pub mod run;
pub mod scenario;

pub use convert::convert;
pub use error::CliError;
pub use run::{build_surface, run_scenario, RunOutcome, RunReport, Status};
pub use scenario::{apply_tolerance_overrides, Mode, Scenario};
