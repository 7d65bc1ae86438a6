//! Event-driven FCFS and STF baselines on identical, non-preemptive CPUs.
//!
//! Tasks wait in a single ready queue. Whenever a CPU is idle and the queue is
//! non-empty the queue head is dispatched to the lowest-numbered idle CPU. A
//! queued task whose latest start time has passed is dropped.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{Schedule, Slot, Task, TaskSet};

/// Dispatch order of the ready queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// `(arrival, id)`.
    Fcfs,
    /// `(proc_time, arrival, id)`.
    Stf,
}

impl Policy {
    fn key(self, t: &Task) -> (Slot, Slot, u32) {
        match self {
            Policy::Fcfs => (t.arrival, 0, t.id),
            Policy::Stf => (t.proc_time, t.arrival, t.id),
        }
    }
}

pub fn schedule_fcfs(tasks: &TaskSet, m_cpus: u32) -> Schedule {
    simulate(tasks, m_cpus, Policy::Fcfs)
}

pub fn schedule_stf(tasks: &TaskSet, m_cpus: u32) -> Schedule {
    simulate(tasks, m_cpus, Policy::Stf)
}

pub fn simulate(tasks: &TaskSet, m_cpus: u32, policy: Policy) -> Schedule {
    assert!(m_cpus >= 1, "need at least one CPU");
    let list = tasks.tasks();
    let mut decisions: Vec<Option<(u32, Slot)>> = vec![None; list.len()];
    let mut free_at: Vec<Slot> = vec![Slot::MIN; m_cpus as usize];
    let mut ready: BTreeSet<((Slot, Slot, u32), usize)> = BTreeSet::new();
    let mut expiry: BTreeSet<(Slot, usize)> = BTreeSet::new();
    let mut next = 0;

    let Some(first) = list.first() else {
        return Schedule::from_decisions(tasks, m_cpus, &decisions);
    };
    let mut now = first.arrival;
    loop {
        while next < list.len() && list[next].arrival <= now {
            let t = &list[next];
            ready.insert((policy.key(t), next));
            expiry.insert((t.latest_start(), next));
            next += 1;
        }
        while let Some(&(ls, idx)) = expiry.first() {
            if ls >= now {
                break;
            }
            expiry.pop_first();
            ready.remove(&(policy.key(&list[idx]), idx));
        }
        for (cpu, free) in free_at.iter_mut().enumerate() {
            if *free > now {
                continue;
            }
            let Some((_, idx)) = ready.pop_first() else { break };
            let t = &list[idx];
            expiry.remove(&(t.latest_start(), idx));
            decisions[idx] = Some((cpu as u32 + 1, now));
            *free = now + t.proc_time;
        }

        let next_arrival = list.get(next).map(|t| t.arrival);
        let next_free = if ready.is_empty() { None } else { free_at.iter().copied().filter(|&f| f > now).min() };
        now = match (next_arrival, next_free) {
            (Some(a), Some(f)) => a.min(f),
            (Some(a), None) => a,
            (None, Some(f)) => f,
            (None, None) => break,
        };
    }
    Schedule::from_decisions(tasks, m_cpus, &decisions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::i1;
    use crate::model::SlotDuration;
    use crate::validate::validate_schedule;

    fn set(specs: &[(u32, Slot, Slot, Slot)]) -> TaskSet {
        let tasks = specs
            .iter()
            .map(|&(id, arrival, proc_time, deadline)| Task { id, user_id: 0, arrival, proc_time, deadline })
            .collect();
        TaskSet::new(tasks, SlotDuration::MILLISECOND).unwrap()
    }

    #[test]
    fn single_task_starts_on_arrival() {
        let tasks = set(&[(1, 7, 3, 20)]);
        for s in [schedule_fcfs(&tasks, 2), schedule_stf(&tasks, 2)] {
            assert_eq!(s.decisions(&tasks).unwrap(), vec![Some((1, 7))]);
            assert_eq!(s.assignments[0].waiting, 0);
        }
    }

    #[test]
    fn fcfs_on_i1() {
        let tasks = i1();
        let s = schedule_fcfs(&tasks, 1);
        // index order: T1, T2, T3
        assert_eq!(s.decisions(&tasks).unwrap(), vec![Some((1, 0)), None, Some((1, 5))]);
        assert_eq!(s.dropped, vec![2]);
        assert!(validate_schedule(&s, &tasks).is_empty());
    }

    #[test]
    fn stf_on_i1() {
        let tasks = i1();
        let s = schedule_stf(&tasks, 1);
        assert_eq!(s.decisions(&tasks).unwrap(), vec![Some((1, 4)), Some((1, 0)), Some((1, 2))]);
        assert!(s.dropped.is_empty());
    }

    #[test]
    fn simultaneous_arrivals_spread_over_cpus() {
        let tasks = set(&[(1, 0, 4, 10), (2, 0, 6, 10)]);
        let s = schedule_fcfs(&tasks, 2);
        assert_eq!(s.decisions(&tasks).unwrap(), vec![Some((1, 0)), Some((2, 0))]);
    }

    #[test]
    fn equal_proc_times_make_stf_fcfs() {
        let tasks = set(&[(1, 0, 3, 5), (2, 1, 3, 9), (3, 1, 3, 30), (4, 2, 3, 7), (5, 9, 3, 12)]);
        for m in 1..=3 {
            assert_eq!(schedule_fcfs(&tasks, m), schedule_stf(&tasks, m));
        }
    }

    #[test]
    fn drop_at_latest_start_boundary() {
        // T2 may start exactly at its latest start (5) but not later.
        let tasks = set(&[(1, 0, 5, 5), (2, 0, 1, 6), (3, 0, 1, 5)]);
        let s = schedule_fcfs(&tasks, 1);
        assert_eq!(s.decisions(&tasks).unwrap(), vec![Some((1, 0)), Some((1, 5)), None]);
    }

    #[test]
    fn unschedulable_task_is_dropped() {
        let tasks = set(&[(1, 0, 5, 3)]);
        assert_eq!(schedule_stf(&tasks, 1).dropped, vec![1]);
    }
}
