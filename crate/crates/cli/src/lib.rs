//! Scenario-driven front end for `svpkit`: parse a scenario file, run one
//! command, write CSV reports and a summary.

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::{
    exit_code, parse_ladder, run, CliError, Command, Outcome, RunOptions, EXIT_ERROR,
};
pub use scenario::{Scenario, ScenarioError, ToleranceProfile};
