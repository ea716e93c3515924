//! Scenario files, the builtin gallery, the run pipeline and its reports.

pub mod builtins;
pub mod config;
pub mod report;
pub mod run;

pub use builtins::builtin;
pub use config::{Scenario, ScenarioConfig, Verdict};
pub use report::{Format, RunReport, SampleRecord, Summary};
pub use run::{run_scenario, RunOptions, Stages};
