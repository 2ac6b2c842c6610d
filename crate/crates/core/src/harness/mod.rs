//! Running programs, comparing the two machines and checking invariants.

pub mod fixtures;
mod invariants;
mod observe;
mod run;
pub mod scenarios;

pub use invariants::{check_linearity_source, check_linearity_target, check_stack, linear_aliases, LinearAlias};
pub use observe::Observation;
pub use run::{
    first_divergence, run_config, run_diff, run_diff_program, run_one, DiffVerdict, Outcome, RunOptions, RunReport,
    RunSetup, CALL_CATCH_UP, RETURN_CATCH_UP,
};
