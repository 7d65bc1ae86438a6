//! Feasibility checks for schedules. Violations are returned as data.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Schedule, TaskId, TaskSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// The schedule names a task that is not in the set.
    UnknownTask,
    /// A task is assigned or dropped more than once.
    Duplicate,
    /// A task is neither assigned nor dropped.
    Missing,
    CpuRange,
    /// Start before arrival.
    Arrival,
    /// Completion after the deadline.
    Deadline,
    /// `waiting` differs from `start - arrival`.
    Waiting,
    /// Two executions overlap on one CPU.
    CpuOverlap,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::UnknownTask => "unknown-task",
            Rule::Duplicate => "duplicate",
            Rule::Missing => "missing",
            Rule::CpuRange => "cpu-range",
            Rule::Arrival => "arrival",
            Rule::Deadline => "deadline",
            Rule::Waiting => "waiting",
            Rule::CpuOverlap => "cpu-overlap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    pub task_id: Option<TaskId>,
    /// The other task of a `cpu-overlap`.
    pub other_task: Option<TaskId>,
    pub cpu: Option<u32>,
}

impl Violation {
    fn task(rule: Rule, task_id: TaskId) -> Self {
        Violation { rule, task_id: Some(task_id), other_task: None, cpu: None }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.rule.name())?;
        if let Some(t) = self.task_id {
            write!(f, " task={t}")?;
        }
        if let Some(t) = self.other_task {
            write!(f, " other={t}")?;
        }
        if let Some(c) = self.cpu {
            write!(f, " cpu={c}")?;
        }
        Ok(())
    }
}

/// Lists every broken schedule invariant; empty means the schedule is feasible.
pub fn validate_schedule(schedule: &Schedule, tasks: &TaskSet) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = vec![false; tasks.len()];
    let mut mark = |id: TaskId, out: &mut Vec<Violation>| -> Option<usize> {
        let Some(idx) = tasks.index_of(id) else {
            out.push(Violation::task(Rule::UnknownTask, id));
            return None;
        };
        if seen[idx] {
            out.push(Violation::task(Rule::Duplicate, id));
            return None;
        }
        seen[idx] = true;
        Some(idx)
    };

    // (cpu, start, end, task)
    let mut intervals = Vec::with_capacity(schedule.assignments.len());
    for a in &schedule.assignments {
        let Some(idx) = mark(a.task_id, &mut out) else { continue };
        let task = &tasks.tasks()[idx];
        if a.cpu == 0 || a.cpu > schedule.m_cpus {
            out.push(Violation { cpu: Some(a.cpu), ..Violation::task(Rule::CpuRange, a.task_id) });
            continue;
        }
        if a.start < task.arrival {
            out.push(Violation::task(Rule::Arrival, a.task_id));
        }
        if a.start + task.proc_time > task.deadline {
            out.push(Violation::task(Rule::Deadline, a.task_id));
        }
        if a.waiting != a.start - task.arrival {
            out.push(Violation::task(Rule::Waiting, a.task_id));
        }
        intervals.push((a.cpu, a.start, a.start + task.proc_time, a.task_id));
    }
    for &id in &schedule.dropped {
        mark(id, &mut out);
    }
    for (idx, covered) in seen.iter().enumerate() {
        if !covered {
            out.push(Violation::task(Rule::Missing, tasks.tasks()[idx].id));
        }
    }

    intervals.sort_unstable();
    let mut reach: Option<(u32, i64, TaskId)> = None;
    for &(cpu, start, end, id) in &intervals {
        match reach {
            Some((c, r_end, r_id)) if c == cpu => {
                if start < r_end {
                    out.push(Violation {
                        rule: Rule::CpuOverlap,
                        task_id: Some(id),
                        other_task: Some(r_id),
                        cpu: Some(cpu),
                    });
                }
                if end > r_end {
                    reach = Some((cpu, end, id));
                }
            }
            _ => reach = Some((cpu, end, id)),
        }
    }
    out
}
