//! Tasks, task sets, schedules and objective weights.
//!
//! All times are integer slot counts. A [`SlotDuration`] fixes how many
//! microseconds one slot lasts, so millisecond values are recovered exactly.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::workload::WorkloadConfig;
use crate::{Error, Result};

/// A point in time or a duration, counted in slots.
pub type Slot = i64;

pub type TaskId = u32;

/// Largest representable time, in slots.
pub const MAX_HORIZON: u64 = 1 << 53;

/// Length of one time slot, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotDuration(u64);

impl SlotDuration {
    pub const MILLISECOND: SlotDuration = SlotDuration(1000);

    pub fn from_micros(us: u64) -> Result<Self> {
        if us == 0 {
            return Err(Error::InvalidParameter("slot duration must be positive".into()));
        }
        Ok(SlotDuration(us))
    }

    pub fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn slots_to_ms(self, slots: Slot) -> f64 {
        slots as f64 * self.as_ms()
    }

    /// Number of whole slots covering `ms` milliseconds, rounded up.
    pub fn ceil_slots(self, ms: f64) -> f64 {
        libm::ceil(ms * 1000.0 / self.0 as f64)
    }
}

impl Default for SlotDuration {
    fn default() -> Self {
        SlotDuration::MILLISECOND
    }
}

/// One offloadable unit of work, as seen by the edge server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    pub user_id: u32,
    /// Server-side arrival (transmission delay already included).
    pub arrival: Slot,
    pub proc_time: Slot,
    /// Absolute completion deadline.
    pub deadline: Slot,
}

impl Task {
    pub fn latest_start(&self) -> Slot {
        self.deadline - self.proc_time
    }

    /// Maximum admissible waiting time. Negative for tasks that can never meet
    /// their deadline.
    pub fn slack(&self) -> Slot {
        self.deadline - self.arrival - self.proc_time
    }

    pub fn is_schedulable(&self) -> bool {
        self.slack() >= 0
    }
}

/// An instance: tasks ordered by `(arrival, id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSet {
    tasks: Vec<Task>,
    slot: SlotDuration,
    /// Generator parameters, when the set came from [`crate::workload::generate_workload`].
    config: Option<WorkloadConfig>,
    by_id: Vec<(TaskId, usize)>,
}

impl TaskSet {
    pub fn new(mut tasks: Vec<Task>, slot: SlotDuration) -> Result<Self> {
        for t in &tasks {
            if t.proc_time <= 0 {
                return Err(Error::NonPositiveProcTime(t.id));
            }
        }
        tasks.sort_by_key(|t| (t.arrival, t.id));
        let mut by_id: Vec<(TaskId, usize)> = tasks.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
        by_id.sort_unstable();
        if let Some(w) = by_id.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateTaskId(w[0].0));
        }
        Ok(TaskSet { tasks, slot, config: None, by_id })
    }

    pub(crate) fn with_config(mut self, config: WorkloadConfig) -> Self {
        self.config = Some(config);
        self
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn slot(&self) -> SlotDuration {
        self.slot
    }

    pub fn config(&self) -> Option<&WorkloadConfig> {
        self.config.as_ref()
    }

    /// Position of task `id` in [`TaskSet::tasks`].
    pub fn index_of(&self, id: TaskId) -> Option<usize> {
        self.by_id.binary_search_by_key(&id, |&(k, _)| k).ok().map(|p| self.by_id[p].1)
    }

    /// Latest deadline over all tasks (0 for an empty set).
    pub fn max_deadline(&self) -> Slot {
        self.tasks.iter().map(|t| t.deadline).max().unwrap_or(0).max(0)
    }
}

/// A task placed on a CPU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub task_id: TaskId,
    /// 1-based CPU index.
    pub cpu: u32,
    pub start: Slot,
    pub waiting: Slot,
}

/// Per-CPU start times plus the set of dropped tasks.
///
/// Assignments are kept sorted by task id and `dropped` is sorted, so equal
/// schedules compare (and serialize) equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schedule {
    pub m_cpus: u32,
    pub assignments: Vec<Assignment>,
    pub dropped: Vec<TaskId>,
}

impl Schedule {
    pub fn new(m_cpus: u32, mut assignments: Vec<Assignment>, mut dropped: Vec<TaskId>) -> Self {
        assignments.sort_by_key(|a| a.task_id);
        dropped.sort_unstable();
        Schedule { m_cpus, assignments, dropped }
    }

    /// Builds a schedule from one decision per task, indexed like
    /// [`TaskSet::tasks`]: `Some((cpu, start))` or `None` for a drop.
    pub fn from_decisions(tasks: &TaskSet, m_cpus: u32, decisions: &[Option<(u32, Slot)>]) -> Self {
        debug_assert_eq!(decisions.len(), tasks.len());
        let mut assignments = Vec::new();
        let mut dropped = Vec::new();
        for (task, decision) in tasks.tasks().iter().zip(decisions) {
            match *decision {
                Some((cpu, start)) => {
                    assignments.push(Assignment { task_id: task.id, cpu, start, waiting: start - task.arrival })
                }
                None => dropped.push(task.id),
            }
        }
        Schedule::new(m_cpus, assignments, dropped)
    }

    /// Every task dropped.
    pub fn empty(tasks: &TaskSet, m_cpus: u32) -> Self {
        Schedule::new(m_cpus, Vec::new(), tasks.tasks().iter().map(|t| t.id).collect())
    }

    /// Per-task decisions indexed like [`TaskSet::tasks`]. Fails when the
    /// schedule mentions unknown tasks or covers a task twice or not at all.
    pub fn decisions(&self, tasks: &TaskSet) -> Result<Vec<Option<(u32, Slot)>>> {
        let mut out: Vec<Option<Option<(u32, Slot)>>> = alloc::vec![None; tasks.len()];
        let mut place = |id: TaskId, d: Option<(u32, Slot)>| -> Result<()> {
            let idx = tasks.index_of(id).ok_or_else(|| Error::ScheduleMismatch(format!("unknown task {id}")))?;
            if out[idx].is_some() {
                return Err(Error::ScheduleMismatch(format!("task {id} appears more than once")));
            }
            out[idx] = Some(d);
            Ok(())
        };
        for a in &self.assignments {
            place(a.task_id, Some((a.cpu, a.start)))?;
        }
        for &id in &self.dropped {
            place(id, None)?;
        }
        out.into_iter()
            .enumerate()
            .map(|(i, d)| d.ok_or_else(|| Error::ScheduleMismatch(format!("task {} not covered", tasks.tasks()[i].id))))
            .collect()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.assignments {
            write!(f, "T{}@{}/cpu{} ", a.task_id, a.start, a.cpu)?;
        }
        write!(f, "dropped={:?}", self.dropped)
    }
}

/// Weighting between the delay term (`lambda`) and the dropped term (`1 - lambda`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ObjectiveWeights {
    lambda: f64,
}

impl ObjectiveWeights {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        Ok(ObjectiveWeights { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights { lambda: 0.5 }
    }
}

impl TryFrom<f64> for ObjectiveWeights {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        ObjectiveWeights::new(v)
    }
}

impl From<ObjectiveWeights> for f64 {
    fn from(w: ObjectiveWeights) -> f64 {
        w.lambda
    }
}
