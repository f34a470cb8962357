//! Slotted-time simulator and analytical toolkit for leader-based scheduling
//! in point-to-multipoint storage networks, comparing uncoded
//! (replicated/striped) and network-coded storage.
//!
//! * [`gf`]: finite-field arithmetic and incremental elimination
//! * [`layout`]: chunk placement onto drives
//! * [`sim`]: the slot engine, configuration and RNG streams
//! * [`sched`]: scheduler and tie-policy registry, plus the exhaustive oracle
//! * [`analytics`]: closed-form blocking probabilities
//! * [`metrics`]: accumulation and summary statistics

pub mod analytics;
pub mod bits;
pub mod gf;
pub mod layout;
pub mod metrics;
pub mod sched;
pub mod sim;

pub use layout::{DriveLayout, Generator, LayoutParams, StorageMode};
pub use metrics::{summarize, MetricsAccumulator, SummaryStats};
pub use sched::{Decision, Registry, Scheduler, TiePolicy};
pub use sim::{run_replication, Mode, ScenarioConfig, SimError, SimState, SlotRecord};
