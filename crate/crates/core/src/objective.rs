//! The joint delay / dropped-ratio objective and per-run metrics.
//!
//! ```text
//! cost = lambda * sum_{assigned} waiting / slack + (1 - lambda) * dropped / N
//! ```
//!
//! [`Cost`] carries both an `f64` value and the integer terms behind it, so two
//! schedules whose floating-point values are within rounding distance can be
//! ordered exactly with rational arithmetic.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::model::{ObjectiveWeights, Schedule, Slot, TaskSet};
use crate::validate::validate_schedule;
use crate::{Error, Result};

/// Relative gap below which two costs are compared exactly.
const EXACT_BAND: f64 = 1e-9;

/// An objective value under construction or finished.
#[derive(Debug, Clone)]
pub struct Cost {
    lambda: f64,
    n_tasks: usize,
    dropped: usize,
    delay_sum: f64,
    /// `(waiting, slack)` of every term with positive waiting.
    ratios: Vec<(Slot, Slot)>,
}

impl Cost {
    pub fn zero(weights: ObjectiveWeights, n_tasks: usize) -> Self {
        Cost { lambda: weights.lambda(), n_tasks, dropped: 0, delay_sum: 0.0, ratios: Vec::new() }
    }

    /// Adds the delay term of a task that waits `waiting` slots out of `slack`.
    pub fn push_wait(&mut self, task_id: u32, waiting: Slot, slack: Slot) -> Result<()> {
        if waiting < 0 {
            return Err(Error::ScheduleMismatch(format!("task {task_id} starts before its arrival")));
        }
        if waiting == 0 {
            return Ok(());
        }
        if slack <= 0 {
            return Err(Error::InfeasibleTerm { task_id, waiting });
        }
        self.delay_sum += waiting as f64 / slack as f64;
        self.ratios.push((waiting, slack));
        Ok(())
    }

    pub fn push_drop(&mut self) {
        self.dropped += 1;
    }

    /// Adds the terms of `other` (same weights and task count).
    pub fn absorb(&mut self, other: &Cost) {
        debug_assert_eq!(self.n_tasks, other.n_tasks);
        self.dropped += other.dropped;
        self.delay_sum += other.delay_sum;
        self.ratios.extend_from_slice(&other.ratios);
    }

    pub(crate) fn push_drops(&mut self, count: usize) {
        self.dropped += count;
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn value(&self) -> f64 {
        let drop_term = if self.n_tasks == 0 { 0.0 } else { self.dropped as f64 / self.n_tasks as f64 };
        self.lambda * self.delay_sum + (1.0 - self.lambda) * drop_term
    }

    /// The exact rational value (`lambda` taken as the exact binary fraction it stores).
    pub fn exact(&self) -> BigRational {
        let lambda = BigRational::from_float(self.lambda).expect("lambda is finite");
        let mut by_slack: BTreeMap<Slot, Slot> = BTreeMap::new();
        for &(w, s) in &self.ratios {
            *by_slack.entry(s).or_insert(0) += w;
        }
        let mut delay = BigRational::zero();
        for (s, w) in by_slack {
            delay += BigRational::new(BigInt::from(w), BigInt::from(s));
        }
        let drop_term = if self.n_tasks == 0 {
            BigRational::zero()
        } else {
            BigRational::new(BigInt::from(self.dropped), BigInt::from(self.n_tasks))
        };
        let rest = BigRational::one() - &lambda;
        lambda * delay + rest * drop_term
    }

    /// Total order on objective values; floating point when clearly apart,
    /// exact rational arithmetic otherwise.
    pub fn compare(&self, other: &Cost) -> Ordering {
        debug_assert_eq!(self.n_tasks, other.n_tasks);
        let (a, b) = (self.value(), other.value());
        let band = EXACT_BAND * (1.0 + a.abs().max(b.abs()));
        if a < b - band {
            Ordering::Less
        } else if a > b + band {
            Ordering::Greater
        } else {
            self.exact().cmp(&other.exact())
        }
    }

    pub fn is_better_than(&self, other: &Cost) -> bool {
        self.compare(other) == Ordering::Less
    }
}

/// The objective of `schedule` with every term kept.
pub fn schedule_cost(schedule: &Schedule, tasks: &TaskSet, weights: ObjectiveWeights) -> Result<Cost> {
    let decisions = schedule.decisions(tasks)?;
    let mut cost = Cost::zero(weights, tasks.len());
    for (task, decision) in tasks.tasks().iter().zip(&decisions) {
        match decision {
            Some((_, start)) => cost.push_wait(task.id, start - task.arrival, task.slack())?,
            None => cost.push_drop(),
        }
    }
    Ok(cost)
}

/// Weighted sum of normalized waiting times and the dropped-task ratio.
///
/// A task with zero slack that starts on arrival contributes nothing; one that
/// waits is an `infeasible-term` error.
pub fn evaluate_objective(schedule: &Schedule, tasks: &TaskSet, weights: ObjectiveWeights) -> Result<f64> {
    Ok(schedule_cost(schedule, tasks, weights)?.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Mean waiting time of completed tasks, in ms.
    pub mean_delay_ms: f64,
    /// False when no task completed (`mean_delay_ms` is then 0).
    pub delay_defined: bool,
    pub dropped_ratio: f64,
    pub objective: f64,
    /// Wall-clock solver time; filled in by callers that measure it.
    pub solver_runtime_ms: f64,
    pub n_tasks: usize,
    pub n_assigned: usize,
    pub n_dropped: usize,
}

/// Metrics of a valid schedule.
pub fn compute_metrics(schedule: &Schedule, tasks: &TaskSet, weights: ObjectiveWeights) -> Result<RunMetrics> {
    let violations = validate_schedule(schedule, tasks);
    if let Some(first) = violations.first() {
        return Err(Error::InvalidSchedule { count: violations.len(), first: format!("{first}") });
    }
    let n_assigned = schedule.assignments.len();
    let n_dropped = schedule.dropped.len();
    let total_wait: Slot = schedule.assignments.iter().map(|a| a.waiting).sum();
    let mean_delay_ms = if n_assigned == 0 { 0.0 } else { tasks.slot().slots_to_ms(total_wait) / n_assigned as f64 };
    Ok(RunMetrics {
        mean_delay_ms,
        delay_defined: n_assigned > 0,
        dropped_ratio: if tasks.is_empty() { 0.0 } else { n_dropped as f64 / tasks.len() as f64 },
        objective: evaluate_objective(schedule, tasks, weights)?,
        solver_runtime_ms: 0.0,
        n_tasks: tasks.len(),
        n_assigned,
        n_dropped,
    })
}
