//! The time-indexed 0-1 model.
//!
//! Variables, per task `i`, CPU `j` and slot `t`:
//!
//! | family | meaning                                   | kind            |
//! |--------|-------------------------------------------|-----------------|
//! | `x`    | task `i` runs on CPU `j`                  | binary          |
//! | `tw`   | waiting time of `i`, slots                | integer `[0,W]` |
//! | `A`    | `x · tw`                                  | integer `[0,W]` |
//! | `M`    | `i` occupies slot `t` of CPU `j`          | binary          |
//! | `T`    | `x · M`                                   | binary          |
//! | `S`    | `i` starts at slot `t` on CPU `j`         | binary          |
//!
//! `W = deadline - arrival - proc_time`. The objective is
//! `lambda · Σ A/W + (1 - lambda) · (N - Σ x) / N`; its constant part is carried
//! by a variable fixed to 1 so LP writers need no objective offset.
//!
//! The tableau is never stored. Constraints are generated on demand, which is
//! enough for LP export and for checking a candidate point against the model.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::model::{ObjectiveWeights, Schedule, Slot, SlotDuration, Task, TaskSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Assign {
        task: usize,
        cpu: u32,
    },
    Wait {
        task: usize,
    },
    /// `A_ij`
    WaitProduct {
        task: usize,
        cpu: u32,
    },
    /// `M_itj`
    Occupy {
        task: usize,
        slot: Slot,
        cpu: u32,
    },
    /// `T_itj`
    OccupyProduct {
        task: usize,
        slot: Slot,
        cpu: u32,
    },
    Start {
        task: usize,
        slot: Slot,
        cpu: u32,
    },
    /// Fixed to 1; carries the objective constant.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        const TOL: f64 = 1e-9;
        match self {
            Sense::Le => lhs <= rhs + TOL,
            Sense::Ge => lhs >= rhs - TOL,
            Sense::Eq => (lhs - rhs).abs() <= TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(Var, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    fn new(name: String, terms: Vec<(Var, f64)>, sense: Sense, rhs: f64) -> Self {
        Constraint { name, terms, sense, rhs }
    }

    pub fn lhs(&self, value: impl Fn(Var) -> f64) -> f64 {
        self.terms.iter().map(|&(v, c)| c * value(v)).sum()
    }

    pub fn is_satisfied(&self, value: impl Fn(Var) -> f64) -> bool {
        self.sense.holds(self.lhs(value), self.rhs)
    }
}

/// Big-M linearization of `product = binary · bounded` with `0 ≤ bounded ≤ bound`:
///
/// ```text
/// product - bound·binary           <= 0
/// product - bounded                <= 0
/// bound·binary + bounded - product <= bound
/// ```
///
/// With `bound = 1` these are the usual binary-product inequalities.
/// `(terms, sense, rhs)`.
pub type LinearRow = (Vec<(Var, f64)>, Sense, f64);

pub fn linearize_product(binary: Var, bounded: Var, product: Var, bound: f64) -> [LinearRow; 3] {
    [
        (vec![(product, 1.0), (binary, -bound)], Sense::Le, 0.0),
        (vec![(product, 1.0), (bounded, -1.0)], Sense::Le, 0.0),
        (vec![(binary, bound), (bounded, 1.0), (product, -1.0)], Sense::Le, bound),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VarCounts {
    pub assign: usize,
    pub wait: usize,
    pub wait_product: usize,
    pub occupy: usize,
    pub occupy_product: usize,
    pub start: usize,
}

impl VarCounts {
    pub fn total(&self) -> usize {
        self.assign + self.wait + self.wait_product + self.occupy + self.occupy_product + self.start + 1
    }
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    tasks: TaskSet,
    m_cpus: u32,
    weights: ObjectiveWeights,
    horizon: Slot,
}

/// Builds the model on the task set's own slot grid with the horizon set to
/// the latest deadline.
pub fn build_model(tasks: &TaskSet, m_cpus: u32, weights: ObjectiveWeights) -> Result<MilpModel> {
    MilpModel::new(tasks, m_cpus, weights, tasks.slot(), None)
}

impl MilpModel {
    /// `slot` may be coarser than the task set's resolution as long as every
    /// time is a whole number of the new slots. `horizon` defaults to the
    /// latest deadline and may not be shorter.
    pub fn new(
        tasks: &TaskSet,
        m_cpus: u32,
        weights: ObjectiveWeights,
        slot: SlotDuration,
        horizon: Option<Slot>,
    ) -> Result<Self> {
        if m_cpus == 0 {
            return Err(Error::InvalidParameter("m_cpus must be at least 1".into()));
        }
        let tasks = rescale(tasks, slot)?;
        let needed = tasks.max_deadline();
        let horizon = horizon.unwrap_or(needed);
        if horizon < needed {
            return Err(Error::InvalidParameter(format!(
                "horizon {horizon} is shorter than the latest deadline {needed}"
            )));
        }
        Ok(MilpModel { tasks, m_cpus, weights, horizon })
    }

    pub fn tasks(&self) -> &TaskSet {
        &self.tasks
    }

    pub fn m_cpus(&self) -> u32 {
        self.m_cpus
    }

    pub fn weights(&self) -> ObjectiveWeights {
        self.weights
    }

    pub fn horizon(&self) -> Slot {
        self.horizon
    }

    pub fn slot(&self) -> SlotDuration {
        self.tasks.slot()
    }

    pub fn var_counts(&self) -> VarCounts {
        let (n, m, t) = (self.tasks.len(), self.m_cpus as usize, self.horizon as usize);
        VarCounts {
            assign: n * m,
            wait: n,
            wait_product: n * m,
            occupy: n * t * m,
            occupy_product: n * t * m,
            start: n * t * m,
        }
    }

    fn task(&self, i: usize) -> &Task {
        &self.tasks.tasks()[i]
    }

    /// `W_i`, clamped at 0 for tasks that cannot meet their deadline.
    pub fn max_wait(&self, i: usize) -> Slot {
        self.task(i).slack().max(0)
    }

    fn cpus(&self) -> impl Iterator<Item = u32> {
        1..=self.m_cpus
    }

    fn slots(&self) -> core::ops::Range<Slot> {
        0..self.horizon
    }

    /// Admissible start slots of task `i`.
    pub fn start_window(&self, i: usize) -> core::ops::RangeInclusive<Slot> {
        let t = self.task(i);
        t.arrival.max(0)..=t.latest_start().min(self.horizon - 1)
    }

    pub fn var_name(&self, v: Var) -> String {
        let id = |i: usize| self.task(i).id;
        match v {
            Var::Assign { task, cpu } => format!("x_{}_{}", id(task), cpu),
            Var::Wait { task } => format!("tw_{}", id(task)),
            Var::WaitProduct { task, cpu } => format!("A_{}_{}", id(task), cpu),
            Var::Occupy { task, slot, cpu } => format!("M_{}_{}_{}", id(task), slot, cpu),
            Var::OccupyProduct { task, slot, cpu } => format!("T_{}_{}_{}", id(task), slot, cpu),
            Var::Start { task, slot, cpu } => format!("S_{}_{}_{}", id(task), slot, cpu),
            Var::Constant => "obj_const".into(),
        }
    }

    pub fn var_kind(&self, v: Var) -> VarKind {
        match v {
            Var::Wait { .. } | Var::WaitProduct { .. } => VarKind::Integer,
            Var::Constant => VarKind::Fixed,
            _ => VarKind::Binary,
        }
    }

    pub fn var_bounds(&self, v: Var) -> (f64, f64) {
        match v {
            Var::Wait { task } | Var::WaitProduct { task, .. } => (0.0, self.max_wait(task) as f64),
            Var::Constant => (1.0, 1.0),
            _ => (0.0, 1.0),
        }
    }

    /// Every variable, grouped by family, then task, slot and CPU.
    pub fn for_each_var(&self, mut f: impl FnMut(Var)) {
        let n = self.tasks.len();
        for task in 0..n {
            self.cpus().for_each(|cpu| f(Var::Assign { task, cpu }));
        }
        (0..n).for_each(|task| f(Var::Wait { task }));
        for task in 0..n {
            self.cpus().for_each(|cpu| f(Var::WaitProduct { task, cpu }));
        }
        for family in 0..3 {
            for task in 0..n {
                for slot in self.slots() {
                    for cpu in self.cpus() {
                        f(match family {
                            0 => Var::Occupy { task, slot, cpu },
                            1 => Var::OccupyProduct { task, slot, cpu },
                            _ => Var::Start { task, slot, cpu },
                        });
                    }
                }
            }
        }
        f(Var::Constant);
    }

    /// Linear objective terms (the constant rides on [`Var::Constant`]).
    pub fn objective(&self) -> Vec<(Var, f64)> {
        let lambda = self.weights.lambda();
        let n = self.tasks.len();
        let drop_coef = if n == 0 { 0.0 } else { (1.0 - lambda) / n as f64 };
        let mut terms = Vec::new();
        for task in 0..n {
            let w = self.max_wait(task);
            for cpu in self.cpus() {
                if w > 0 && lambda != 0.0 {
                    terms.push((Var::WaitProduct { task, cpu }, lambda / w as f64));
                }
                if drop_coef != 0.0 {
                    terms.push((Var::Assign { task, cpu }, -drop_coef));
                }
            }
        }
        terms.push((Var::Constant, if n == 0 { 0.0 } else { 1.0 - lambda }));
        terms
    }

    /// Generates every constraint in a fixed order.
    pub fn for_each_constraint(&self, mut f: impl FnMut(Constraint)) {
        let n = self.tasks.len();
        for i in 0..n {
            let t = *self.task(i);
            let id = t.id;
            let w = self.max_wait(i);
            let window = self.start_window(i);

            f(Constraint::new(
                format!("assign_{id}"),
                self.cpus().map(|cpu| (Var::Assign { task: i, cpu }, 1.0)).collect(),
                Sense::Le,
                1.0,
            ));

            let mut wait_terms = vec![(Var::Wait { task: i }, 1.0)];
            for cpu in self.cpus() {
                let x = Var::Assign { task: i, cpu };
                if window.is_empty() {
                    f(Constraint::new(format!("nowindow_{id}_{cpu}"), vec![(x, 1.0)], Sense::Eq, 0.0));
                }
                let mut start: Vec<(Var, f64)> =
                    window.clone().map(|slot| (Var::Start { task: i, slot, cpu }, 1.0)).collect();
                start.push((x, -1.0));
                f(Constraint::new(format!("start_{id}_{cpu}"), start, Sense::Eq, 0.0));

                let outside: Vec<(Var, f64)> = self
                    .slots()
                    .filter(|s| !window.contains(s))
                    .map(|slot| (Var::Start { task: i, slot, cpu }, 1.0))
                    .collect();
                if !outside.is_empty() {
                    f(Constraint::new(format!("startwin_{id}_{cpu}"), outside, Sense::Eq, 0.0));
                }

                // no occupancy before arrival
                let early: Vec<(Var, f64)> = self
                    .slots()
                    .take_while(|&s| s < t.arrival)
                    .map(|slot| (Var::Occupy { task: i, slot, cpu }, 1.0))
                    .collect();
                if !early.is_empty() {
                    f(Constraint::new(format!("avail_{id}_{cpu}"), early, Sense::Eq, 0.0));
                }

                // allocated slots equal the processing time when assigned
                let mut alloc_terms: Vec<(Var, f64)> =
                    self.slots().map(|slot| (Var::OccupyProduct { task: i, slot, cpu }, 1.0)).collect();
                alloc_terms.push((x, -(t.proc_time as f64)));
                f(Constraint::new(format!("alloc_{id}_{cpu}"), alloc_terms, Sense::Eq, 0.0));

                let a = Var::WaitProduct { task: i, cpu };
                for (k, (terms, sense, rhs)) in
                    linearize_product(x, Var::Wait { task: i }, a, w as f64).into_iter().enumerate()
                {
                    f(Constraint::new(format!("linA{}_{id}_{cpu}", k + 1), terms, sense, rhs));
                }

                for slot in self.slots() {
                    let m = Var::Occupy { task: i, slot, cpu };
                    // contiguous execution: occupied iff started within the last p slots
                    let mut occ = vec![(m, 1.0)];
                    for s in (slot - t.proc_time + 1).max(0)..=slot {
                        occ.push((Var::Start { task: i, slot: s, cpu }, -1.0));
                    }
                    f(Constraint::new(format!("occ_{id}_{slot}_{cpu}"), occ, Sense::Eq, 0.0));

                    let prod = Var::OccupyProduct { task: i, slot, cpu };
                    for (k, (terms, sense, rhs)) in linearize_product(x, m, prod, 1.0).into_iter().enumerate() {
                        f(Constraint::new(format!("linT{}_{id}_{slot}_{cpu}", k + 1), terms, sense, rhs));
                    }
                }

                for slot in window.clone() {
                    let offset = slot - t.arrival;
                    if offset != 0 {
                        wait_terms.push((Var::Start { task: i, slot, cpu }, -(offset as f64)));
                    }
                }
            }
            f(Constraint::new(format!("wait_{id}"), wait_terms, Sense::Eq, 0.0));
        }

        for slot in self.slots() {
            for cpu in self.cpus() {
                f(Constraint::new(
                    format!("cap_{slot}_{cpu}"),
                    (0..n).map(|task| (Var::OccupyProduct { task, slot, cpu }, 1.0)).collect(),
                    Sense::Le,
                    1.0,
                ));
            }
        }
    }

    pub fn constraint_count(&self) -> usize {
        let mut n = 0;
        self.for_each_constraint(|_| n += 1);
        n
    }

    /// The model point that represents `schedule`.
    pub fn point(&self, schedule: &Schedule) -> Result<ModelPoint> {
        Ok(ModelPoint { decisions: schedule.decisions(&self.tasks)? })
    }

    /// Names of violated constraints and bounds at `point`.
    pub fn check(&self, point: &ModelPoint) -> Vec<String> {
        let value = |v| point.value(self, v);
        let mut bad = Vec::new();
        self.for_each_var(|v| {
            let (lo, hi) = self.var_bounds(v);
            let x = value(v);
            if x < lo - 1e-9 || x > hi + 1e-9 {
                bad.push(format!("bound:{}", self.var_name(v)));
            }
        });
        self.for_each_constraint(|c| {
            if !c.is_satisfied(value) {
                bad.push(c.name);
            }
        });
        bad
    }

    pub fn objective_at(&self, point: &ModelPoint) -> f64 {
        self.objective().iter().map(|&(v, c)| c * point.value(self, v)).sum()
    }
}

/// A full variable assignment derived from per-task decisions.
#[derive(Debug, Clone)]
pub struct ModelPoint {
    decisions: Vec<Option<(u32, Slot)>>,
}

impl ModelPoint {
    pub fn value(&self, model: &MilpModel, v: Var) -> f64 {
        let on = |task: usize, cpu: u32| matches!(self.decisions[task], Some((c, _)) if c == cpu);
        let occupies = |task: usize, slot: Slot, cpu: u32| match self.decisions[task] {
            Some((c, s)) => c == cpu && s <= slot && slot < s + model.task(task).proc_time,
            None => false,
        };
        let wait = |task: usize| self.decisions[task].map_or(0, |(_, s)| s - model.task(task).arrival);
        let b = |cond: bool| if cond { 1.0 } else { 0.0 };
        match v {
            Var::Assign { task, cpu } => b(on(task, cpu)),
            Var::Wait { task } => wait(task) as f64,
            Var::WaitProduct { task, cpu } => b(on(task, cpu)) * wait(task) as f64,
            Var::Occupy { task, slot, cpu } | Var::OccupyProduct { task, slot, cpu } => b(occupies(task, slot, cpu)),
            Var::Start { task, slot, cpu } => b(self.decisions[task] == Some((cpu, slot))),
            Var::Constant => 1.0,
        }
    }
}

/// Re-expresses all times on a (possibly coarser) slot grid.
pub fn rescale(tasks: &TaskSet, slot: SlotDuration) -> Result<TaskSet> {
    let from = tasks.slot().as_micros();
    let to = slot.as_micros();
    if from == to {
        return Ok(tasks.clone());
    }
    let convert = |id: u32, v: Slot| -> Result<Slot> {
        let us = v as i128 * from as i128;
        if us % to as i128 != 0 {
            return Err(Error::NonDivisibleTime { task_id: id, value_us: us as u64, slot_us: to });
        }
        Ok((us / to as i128) as Slot)
    };
    let converted = tasks
        .tasks()
        .iter()
        .map(|t| {
            Ok(Task {
                arrival: convert(t.id, t.arrival)?,
                proc_time: convert(t.id, t.proc_time)?,
                deadline: convert(t.id, t.deadline)?,
                ..*t
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TaskSet::new(converted, slot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::i1;

    fn half() -> ObjectiveWeights {
        ObjectiveWeights::new(0.5).unwrap()
    }

    fn one_task(deadline: Slot) -> TaskSet {
        TaskSet::new(vec![Task { id: 1, user_id: 0, arrival: 0, proc_time: 1, deadline }], SlotDuration::MILLISECOND)
            .unwrap()
    }

    #[test]
    fn variable_counts() {
        let model = MilpModel::new(&one_task(10), 2, half(), SlotDuration::MILLISECOND, Some(10)).unwrap();
        let c = model.var_counts();
        assert_eq!((c.assign, c.wait, c.wait_product, c.occupy, c.occupy_product), (2, 1, 2, 20, 20));
        let mut seen = 0;
        model.for_each_var(|_| seen += 1);
        assert_eq!(seen, c.total());
    }

    #[test]
    fn horizon_too_short() {
        assert!(MilpModel::new(&i1(), 1, half(), SlotDuration::MILLISECOND, Some(5)).is_err());
    }

    #[test]
    fn rescaling() {
        let fine = TaskSet::new(
            vec![Task { id: 1, user_id: 0, arrival: 2000, proc_time: 4000, deadline: 9000 }],
            SlotDuration::from_micros(1).unwrap(),
        )
        .unwrap();
        let coarse = rescale(&fine, SlotDuration::MILLISECOND).unwrap();
        assert_eq!((coarse.tasks()[0].arrival, coarse.tasks()[0].deadline), (2, 9));
        let err = rescale(&fine, SlotDuration::from_micros(3000).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonDivisibleTime { task_id: 1, .. }));
    }

    #[test]
    fn schedules_are_model_points() {
        let tasks = i1();
        let model = build_model(&tasks, 1, half()).unwrap();
        let stf = Schedule::from_decisions(&tasks, 1, &[Some((1, 4)), Some((1, 0)), Some((1, 2))]);
        let p = model.point(&stf).unwrap();
        assert!(model.check(&p).is_empty(), "{:?}", model.check(&p));
        assert!((model.objective_at(&p) - 0.5 * (1.0 / 6.0 + 0.8)).abs() < 1e-12);

        let overlap = Schedule::from_decisions(&tasks, 1, &[Some((1, 0)), Some((1, 1)), None]);
        let bad = model.check(&model.point(&overlap).unwrap());
        assert!(bad.iter().any(|n| n.starts_with("cap_")), "{bad:?}");
        let late = Schedule::from_decisions(&tasks, 1, &[None, Some((1, 3)), None]);
        let bad = model.check(&model.point(&late).unwrap());
        assert!(bad.iter().any(|n| n.starts_with("startwin_")), "{bad:?}");
    }

    #[test]
    fn unschedulable_task_is_pinned_to_zero() {
        let tasks = TaskSet::new(
            vec![Task { id: 3, user_id: 0, arrival: 4, proc_time: 5, deadline: 6 }],
            SlotDuration::MILLISECOND,
        )
        .unwrap();
        let model = build_model(&tasks, 1, half()).unwrap();
        let mut names = Vec::new();
        model.for_each_constraint(|c| names.push(c.name));
        assert!(names.iter().any(|n| n == "nowindow_3_1"));
        let p = model.point(&Schedule::empty(&tasks, 1)).unwrap();
        assert!(model.check(&p).is_empty());
        assert_eq!(model.objective_at(&p), 0.5);
    }
}
