//! Exact depth-first branch and bound over start-time decisions.
//!
//! Shifting a task to an earlier start never increases the objective, so some
//! optimum is semi-active: every task starts at the later of its arrival and
//! the end of its predecessor on the same CPU. The search builds such
//! schedules chronologically. A node picks the open CPU that becomes free
//! first and either appends one undecided task to it or closes it for good;
//! tasks still undecided when every CPU is closed are dropped.
//!
//! Three rules discard children that some other child matches or beats:
//!
//! * a task is not appended when an undecided task could run entirely, with
//!   zero wait, in the idle gap it would leave;
//! * a CPU is not closed while an undecided task could start on it with zero
//!   wait;
//! * a task is not appended when its delay term would exceed the cost of
//!   dropping it.
//!
//! Among the optimal schedules, the one whose start sequence (in generation
//! order) is lexicographically smallest is never discarded by the first two
//! rules, and the third rule only removes strictly worse schedules.
//!
//! The bound adds, for each undecided task, the cheaper of dropping it and
//! waiting until the earliest free CPU. Near ties are settled exactly.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::model::MilpModel;
use crate::greedy::{schedule_fcfs, schedule_stf};
use crate::model::{ObjectiveWeights, Schedule, Slot, Task};
use crate::objective::{schedule_cost, Cost};
use crate::validate::validate_schedule;
use crate::{Error, Result};

/// Search effort limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    #[default]
    Unlimited,
    /// Maximum number of explored nodes.
    Nodes(u64),
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub budget: Budget,
    /// Extra starting incumbents, in the model's task set. All-drop, FCFS and
    /// STF schedules are always tried.
    pub warm_starts: Vec<Schedule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    /// Expressed in the model's task set (and slot resolution).
    pub schedule: Schedule,
    pub objective: f64,
    pub cost: Cost,
    pub status: SolveStatus,
    pub nodes: u64,
}

pub fn solve_exact(model: &MilpModel, budget: Budget) -> Result<ExactSolution> {
    solve_exact_with(model, &SolveOptions { budget, warm_starts: Vec::new() }, || false)
}

/// Like [`solve_exact`]; `should_stop` is polled every few thousand nodes and
/// ends the search early when it returns true (used for wall-clock limits).
pub fn solve_exact_with(
    model: &MilpModel,
    options: &SolveOptions,
    mut should_stop: impl FnMut() -> bool,
) -> Result<ExactSolution> {
    let tasks = model.tasks();
    let m = model.m_cpus();
    let weights = model.weights();

    let mut starts = vec![Schedule::empty(tasks, m), schedule_fcfs(tasks, m), schedule_stf(tasks, m)];
    starts.extend(options.warm_starts.iter().cloned());
    let mut incumbent: Option<(Schedule, Cost)> = None;
    for s in starts {
        let violations = validate_schedule(&s, tasks);
        if let Some(first) = violations.first() {
            return Err(Error::InvalidSchedule { count: violations.len(), first: alloc::format!("{first}") });
        }
        let cost = schedule_cost(&s, tasks, weights)?;
        if incumbent.as_ref().is_none_or(|(_, c)| cost.is_better_than(c)) {
            incumbent = Some((s, cost));
        }
    }
    let (schedule, cost) = incumbent.expect("at least one start");

    let mut search = Search::new(model, schedule, cost);
    let max_nodes = match options.budget {
        Budget::Unlimited => u64::MAX,
        Budget::Nodes(n) => n,
    };
    let complete = search.run(max_nodes, &mut should_stop);
    let schedule = search.best;
    let cost = schedule_cost(&schedule, tasks, weights)?;
    Ok(ExactSolution {
        objective: cost.value(),
        cost,
        schedule,
        status: if complete { SolveStatus::Optimal } else { SolveStatus::BudgetExhausted },
        nodes: search.nodes,
    })
}

fn band(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

#[derive(Debug, Clone, Copy)]
enum Child {
    Append { task: usize, start: Slot },
    Close,
}

#[derive(Debug, Clone, Copy)]
enum Undo {
    Append { task: usize, prev_free: Slot, prev_delay: f64, pushed: bool },
    Close,
}

#[derive(Debug, Clone, Copy)]
enum Lb {
    Drop,
    Zero,
    Wait(Slot),
}

/// Partial cost of a finished node.
struct MemoEntry {
    value: f64,
    dead: usize,
    ratios: Vec<(Slot, Slot)>,
}

impl MemoEntry {
    fn cost(&self, weights: ObjectiveWeights, n: usize) -> Cost {
        let mut cost = Cost::zero(weights, n);
        for &(w, s) in &self.ratios {
            cost.push_wait(0, w, s).expect("positive terms");
        }
        cost.push_drops(self.dead);
        cost
    }
}

/// Upper limit on remembered nodes.
const MEMO_LIMIT: usize = 1 << 21;

struct Frame {
    cpu: usize,
    children: Vec<Child>,
    next: usize,
    applied: Option<Undo>,
}

struct Search<'a> {
    model: &'a MilpModel,
    tasks: &'a [Task],
    lambda: f64,
    /// `(1 - lambda) / N`
    drop_cost: f64,

    free: Vec<Slot>,
    open: Vec<bool>,
    n_open: usize,
    decisions: Vec<Option<(u32, Slot)>>,
    undecided: usize,
    delay: f64,
    ratios: Vec<(Slot, Slot)>,

    /// Latest start whose delay term stays below the drop cost.
    cheap_end: Vec<Slot>,
    by_cheap_end: Vec<usize>,
    relaxed: Vec<(usize, Lb, bool)>,
    active: Vec<Slot>,
    increments: Vec<f64>,
    memo: BTreeMap<Vec<u64>, MemoEntry>,

    best: Schedule,
    best_cost: Cost,
    best_value: f64,
    nodes: u64,
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel, best: Schedule, best_cost: Cost) -> Self {
        let tasks = model.tasks().tasks();
        let lambda = model.weights().lambda();
        let m = model.m_cpus() as usize;
        let n = tasks.len() as f64;
        let cheap_end: Vec<Slot> = tasks
            .iter()
            .map(|t| {
                if lambda == 0.0 || t.slack() <= 0 {
                    return t.latest_start();
                }
                // w < (1 - lambda) W / (lambda N); rounded generously
                let limit = (1.0 - lambda) * t.slack() as f64 / (lambda * n);
                let w = libm::floor(limit * (1.0 + 1e-9) + 1e-9).min(t.slack() as f64) as Slot;
                t.arrival + w
            })
            .collect();
        let mut by_cheap_end: Vec<usize> = (0..tasks.len()).collect();
        by_cheap_end.sort_by_key(|&i| (cheap_end[i], i));
        Search {
            model,
            tasks,
            lambda,
            drop_cost: if tasks.is_empty() { 0.0 } else { (1.0 - lambda) / tasks.len() as f64 },
            free: vec![Slot::MIN; m],
            open: vec![true; m],
            n_open: m,
            decisions: vec![None; tasks.len()],
            undecided: tasks.len(),
            delay: 0.0,
            ratios: Vec::new(),
            cheap_end,
            by_cheap_end,
            relaxed: Vec::new(),
            active: Vec::new(),
            increments: Vec::new(),
            memo: BTreeMap::new(),
            best_value: best_cost.value(),
            best,
            best_cost,
            nodes: 0,
        }
    }

    /// Returns false when the budget ran out before the tree was exhausted.
    fn run(&mut self, max_nodes: u64, should_stop: &mut impl FnMut() -> bool) -> bool {
        if self.solved() {
            return true;
        }
        let mut stack: Vec<Frame> = Vec::new();
        self.nodes = 1;
        if self.is_leaf() {
            self.leaf();
            return true;
        }
        stack.push(self.expand());
        while let Some(frame) = stack.last_mut() {
            let cpu = frame.cpu;
            if let Some(undo) = frame.applied.take() {
                self.revert(cpu, undo);
            }
            let Some(&child) = frame.children.get(frame.next) else {
                stack.pop();
                continue;
            };
            frame.next += 1;
            frame.applied = Some(self.apply(cpu, child));

            self.nodes += 1;
            if self.nodes >= max_nodes || (self.nodes.is_multiple_of(4096) && should_stop()) {
                return false;
            }
            if self.is_leaf() {
                self.leaf();
                if self.solved() {
                    return true;
                }
                continue;
            }
            if self.seen_cheaper() || self.prune() {
                continue;
            }
            let next = self.expand();
            if next.children.is_empty() {
                self.leaf();
            } else {
                stack.push(next);
            }
        }
        true
    }

    fn is_leaf(&self) -> bool {
        self.undecided == 0 || self.n_open == 0
    }

    /// Nothing can beat a zero objective.
    fn solved(&self) -> bool {
        self.best_value == 0.0 && self.best_cost.exact().is_zero()
    }

    fn apply(&mut self, cpu: usize, child: Child) -> Undo {
        match child {
            Child::Append { task, start } => {
                let t = &self.tasks[task];
                let (prev_free, prev_delay) = (self.free[cpu], self.delay);
                self.decisions[task] = Some((cpu as u32 + 1, start));
                self.undecided -= 1;
                self.free[cpu] = start + t.proc_time;
                let w = start - t.arrival;
                if w > 0 {
                    self.delay += w as f64 / t.slack() as f64;
                    self.ratios.push((w, t.slack()));
                }
                Undo::Append { task, prev_free, prev_delay, pushed: w > 0 }
            }
            Child::Close => {
                self.open[cpu] = false;
                self.n_open -= 1;
                Undo::Close
            }
        }
    }

    fn revert(&mut self, cpu: usize, undo: Undo) {
        match undo {
            Undo::Append { task, prev_free, prev_delay, pushed } => {
                self.decisions[task] = None;
                self.undecided += 1;
                self.free[cpu] = prev_free;
                self.delay = prev_delay;
                if pushed {
                    self.ratios.pop();
                }
            }
            Undo::Close => {
                self.open[cpu] = true;
                self.n_open += 1;
            }
        }
    }

    /// Children of the current node, most promising first.
    fn expand(&self) -> Frame {
        let cpu =
            (0..self.open.len()).filter(|&j| self.open[j]).min_by_key(|&j| (self.free[j], j)).expect("an open CPU");
        let f = self.free[cpu];

        // earliest completion of a task that could start on arrival here
        let mut gap_fill = Slot::MAX;
        for (i, t) in self.tasks.iter().enumerate() {
            if self.decisions[i].is_none() && t.arrival >= f && t.slack() >= 0 {
                gap_fill = gap_fill.min(t.arrival + t.proc_time);
            }
        }

        let n = self.tasks.len() as f64;
        let mut keyed: Vec<((Slot, Slot, u32), Child)> = Vec::new();
        for (i, t) in self.tasks.iter().enumerate() {
            if self.decisions[i].is_some() {
                continue;
            }
            let start = t.arrival.max(f);
            if start > t.latest_start() || gap_fill <= start {
                continue;
            }
            let w = start - t.arrival;
            if w > 0 {
                // delay term strictly above the drop cost
                let delay = self.lambda * w as f64 * n;
                let drop = (1.0 - self.lambda) * t.slack() as f64;
                if delay > drop * (1.0 + 1e-12) {
                    continue;
                }
            }
            keyed.push(((start, t.latest_start(), t.id), Child::Append { task: i, start }));
        }
        keyed.sort_unstable_by_key(|&(k, _)| k);
        let mut children: Vec<Child> = keyed.into_iter().map(|(_, c)| c).collect();
        if gap_fill == Slot::MAX {
            children.push(Child::Close);
        }
        Frame { cpu, children, next: 0, applied: None }
    }

    /// True when no completion of the current node can beat the incumbent.
    fn prune(&mut self) -> bool {
        let f_min = self.earliest_free();
        let k = self.relax(f_min);
        let mut bound = self.lambda * self.delay;
        self.increments.clear();
        for &(i, lb, packed) in &self.relaxed {
            let v = self.term_value(i, lb);
            bound += v;
            if packed {
                self.increments.push(self.drop_cost - v);
            }
        }
        if k > 0 {
            self.increments.select_nth_unstable_by(k - 1, f64::total_cmp);
            bound += self.increments[..k].iter().sum::<f64>();
        }
        if bound > self.best_value + band(self.best_value) {
            return true;
        }
        if bound < self.best_value - band(self.best_value) {
            return false;
        }
        self.exact_bound(k) >= self.best_cost.exact()
    }

    /// True when an already finished node reached the same remaining problem
    /// at no higher cost. Otherwise records the current node.
    ///
    /// The remaining problem is fixed by the still schedulable undecided
    /// tasks, the number of closed CPUs and the (sorted) free times of the
    /// open ones, where free times before the next arrival are equivalent.
    fn seen_cheaper(&mut self) -> bool {
        if self.memo.len() >= MEMO_LIMIT {
            return false;
        }
        let f_min = self.earliest_free();
        let words = self.tasks.len().div_ceil(64);
        let mut key = vec![0u64; words];
        let mut next_arrival = Slot::MAX;
        let mut dead = 0;
        for (i, t) in self.tasks.iter().enumerate() {
            if self.decisions[i].is_some() {
                continue;
            }
            if t.arrival.max(f_min) > t.latest_start() {
                dead += 1;
            } else {
                key[i / 64] |= 1 << (i % 64);
                next_arrival = next_arrival.min(t.arrival);
            }
        }
        let mut free: Vec<Slot> =
            (0..self.open.len()).filter(|&j| self.open[j]).map(|j| self.free[j].max(next_arrival)).collect();
        free.sort_unstable();
        key.push((self.open.len() - free.len()) as u64);
        key.extend(free.iter().map(|&f| f as u64));

        let value = self.lambda * self.delay + self.drop_cost * dead as f64;
        let entry = MemoEntry { value, dead, ratios: self.ratios.clone() };
        let (weights, n) = (self.model.weights(), self.tasks.len());
        match self.memo.get_mut(&key) {
            Some(old) => {
                let cheaper = if old.value < value - band(value) {
                    true
                } else if old.value > value + band(value) {
                    false
                } else {
                    old.cost(weights, n).compare(&entry.cost(weights, n)) != Ordering::Greater
                };
                if !cheaper {
                    *old = entry;
                }
                cheaper
            }
            None => {
                self.memo.insert(key, entry);
                false
            }
        }
    }

    fn earliest_free(&self) -> Slot {
        (0..self.open.len()).filter(|&j| self.open[j]).map(|j| self.free[j]).min().unwrap_or(Slot::MAX)
    }

    /// Fills `relaxed` with one entry per undecided task: its cheapest
    /// conceivable term and whether it takes part in the packing argument.
    /// Returns how many of those tasks must pay at least the drop cost.
    ///
    /// A task whose delay term stays below the drop cost must start within a
    /// short window after its arrival, so it surely runs during a fixed
    /// interval. At most as many such intervals can overlap as there are CPUs
    /// already free; the fewest removals restoring that are found greedily by
    /// discarding, at each overflow, the interval that ends last.
    fn relax(&mut self, f_min: Slot) -> usize {
        self.relaxed.clear();
        self.active.clear();
        let mut removed = 0;
        for &i in &self.by_cheap_end {
            if self.decisions[i].is_some() {
                continue;
            }
            let t = &self.tasks[i];
            let start = t.arrival.max(f_min);
            let latest_cheap = self.cheap_end[i];
            let lb = if start > t.latest_start() {
                Lb::Drop
            } else if start == t.arrival {
                Lb::Zero
            } else {
                Lb::Wait(start - t.arrival)
            };
            let end = start + t.proc_time;
            let packed = !matches!(lb, Lb::Drop) && start <= latest_cheap && latest_cheap < end;
            self.relaxed.push((i, lb, packed));
            if !packed {
                continue;
            }
            self.active.retain(|&r| r > latest_cheap);
            self.active.push(end);
            let capacity = (0..self.open.len()).filter(|&j| self.open[j] && self.free[j] <= latest_cheap).count();
            while self.active.len() > capacity {
                let last = (0..self.active.len()).max_by_key(|&a| self.active[a]).expect("non-empty");
                self.active.swap_remove(last);
                removed += 1;
            }
        }
        removed
    }

    fn term_value(&self, i: usize, lb: Lb) -> f64 {
        match lb {
            Lb::Drop => self.drop_cost,
            Lb::Zero => 0.0,
            Lb::Wait(w) => (self.lambda * w as f64 / self.tasks[i].slack() as f64).min(self.drop_cost),
        }
    }

    /// The bound of [`Search::prune`] in exact arithmetic.
    fn exact_bound(&self, k: usize) -> BigRational {
        let lambda = BigRational::from_float(self.lambda).expect("finite lambda");
        let n = self.tasks.len();
        let drop = if n == 0 {
            BigRational::zero()
        } else {
            (BigRational::one() - &lambda) / BigRational::from_integer(BigInt::from(n))
        };
        let mut bound = self.partial().exact();
        let mut increments = Vec::new();
        for &(i, lb, packed) in &self.relaxed {
            let v = match lb {
                Lb::Drop => drop.clone(),
                Lb::Zero => BigRational::zero(),
                Lb::Wait(w) => {
                    let ratio = BigRational::new(BigInt::from(w), BigInt::from(self.tasks[i].slack()));
                    (&lambda * ratio).min(drop.clone())
                }
            };
            if packed {
                increments.push(&drop - &v);
            }
            bound += v;
        }
        increments.sort();
        for inc in increments.into_iter().take(k) {
            bound += inc;
        }
        bound
    }

    fn partial(&self) -> Cost {
        let mut cost = Cost::zero(self.model.weights(), self.tasks.len());
        for &(w, s) in &self.ratios {
            cost.push_wait(0, w, s).expect("positive terms");
        }
        cost
    }

    /// Completes the current node by dropping every undecided task.
    fn leaf(&mut self) {
        let value = self.lambda * self.delay + self.drop_cost * self.undecided as f64;
        if value > self.best_value + band(self.best_value) {
            return;
        }
        let mut cost = self.partial();
        cost.push_drops(self.undecided);
        if cost.is_better_than(&self.best_cost) {
            self.best_value = cost.value();
            self.best_cost = cost;
            self.best = Schedule::from_decisions(self.model.tasks(), self.model.m_cpus(), &self.decisions);
        }
    }
}
