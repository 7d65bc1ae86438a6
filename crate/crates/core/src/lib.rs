//! Deadline-constrained task offloading onto a pool of identical edge CPUs.
//!
//! The crate is `no_std` (it needs `alloc`) and carries everything that is pure
//! computation: the task/schedule model, the joint delay / dropped-ratio
//! objective, seeded workload generation, the FCFS and STF baselines, a
//! genetic algorithm over CPU/drop codes, and the time-indexed 0-1 model with
//! an exact branch-and-bound solver and an LP-format writer.
//!
//! File formats, the experiment harness and the command line live in the
//! `offload` crate.
#![no_std]

extern crate alloc;

mod error;
pub mod ga;
pub mod greedy;
pub mod milp;
pub mod model;
pub mod objective;
pub mod stats;
pub mod validate;
pub mod workload;

pub use error::{Error, Result};
pub use model::{Assignment, ObjectiveWeights, Schedule, Slot, SlotDuration, Task, TaskId, TaskSet};
pub use objective::{compute_metrics, evaluate_objective, Cost, RunMetrics};
pub use stats::{confidence_interval, ConfidenceInterval};
pub use validate::{validate_schedule, Rule, Violation};
