//! Scenario parsing, task execution and figure-data commands for `pcount`.

pub mod figures;
pub mod run;
pub mod scenario;

pub use run::{run, Outcome, RunError};
pub use scenario::{parse_scenario, Scenario, ScenarioError};
