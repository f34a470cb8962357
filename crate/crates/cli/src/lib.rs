//! Experiment harness: scenario documents, presets, replication fan-out and
//! CSV/JSON output, plus the closed-form curves and a quick self-test.

pub mod analytic;
pub mod document;
pub mod error;
pub mod format;
pub mod output;
pub mod presets;
pub mod runner;
pub mod selftest;

pub use document::{ScenarioDocument, Sweep};
pub use error::HarnessError;
pub use runner::{run_cells, run_scenario, CellResult};
