//! Closed-form checks for the worked examples and the battery that runs
//! every verifiable identity in one pass.

pub mod battery;
pub mod closed_forms;

pub use battery::{run_battery, BatteryConfig, BatteryReport, DEFAULT_SEED, REPORT_VERSION};
pub use closed_forms::CheckResult;
