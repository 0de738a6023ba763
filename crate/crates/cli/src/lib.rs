//! Scenario files, reports and the command-line front end of `fncalc`.

pub mod demo;
pub mod report;
pub mod runner;
pub mod scenario;

pub use report::{CheckRecord, Format, Report, Status, Summary};
pub use runner::{run, RunOptions};
pub use scenario::{parse_scenario, ParseError, Scenario};
