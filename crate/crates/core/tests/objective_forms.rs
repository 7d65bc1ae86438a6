mod common;

use common::oracle::{random_instance, scaled_cost, Instance, SLACK_LCM};
use offload_core::{evaluate_objective, ObjectiveWeights, Schedule, Slot, SlotDuration, Task, TaskSet};

/// Every valid schedule of `inst`, as decision vectors.
fn all_schedules(inst: &Instance) -> Vec<Vec<Option<(u32, Slot)>>> {
    fn go(
        tasks: &[Task],
        m: u32,
        k: usize,
        cur: &mut Vec<Option<(u32, Slot)>>,
        out: &mut Vec<Vec<Option<(u32, Slot)>>>,
    ) {
        if k == tasks.len() {
            out.push(cur.clone());
            return;
        }
        let t = tasks[k];
        cur.push(None);
        go(tasks, m, k + 1, cur, out);
        cur.pop();
        for cpu in 1..=m {
            for start in t.arrival..=t.deadline - t.proc_time {
                let clash = cur.iter().zip(tasks).any(|(d, o)| {
                    matches!(d, Some((c, s)) if *c == cpu && start < s + o.proc_time && *s < start + t.proc_time)
                });
                if !clash {
                    cur.push(Some((cpu, start)));
                    go(tasks, m, k + 1, cur, out);
                    cur.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    go(inst.tasks.tasks(), inst.m_cpus, 0, &mut Vec::new(), &mut out);
    out
}

/// The double-sum form: every (task, CPU) pair without an assignment counts
/// towards the dropped term. Scaled like [`Instance::scale`].
fn literal_scaled(inst: &Instance, decisions: &[Option<(u32, Slot)>]) -> i128 {
    let n = inst.tasks.len() as i128;
    let lq = inst.lambda_quarters;
    let mut total = 0;
    for (t, d) in inst.tasks.tasks().iter().zip(decisions) {
        for cpu in 1..=inst.m_cpus {
            let x = matches!(d, Some((c, _)) if *c == cpu);
            if x {
                let w = (d.unwrap().1 - t.arrival) as i128;
                if w > 0 {
                    total += lq * n * w * (SLACK_LCM / t.slack() as i128);
                }
            } else {
                total += (4 - lq) * SLACK_LCM;
            }
        }
    }
    total
}

fn small(seed: u64) -> Instance {
    loop_instance(seed, |i| i.tasks.len() <= 4 && i.tasks.tasks().iter().all(|t| t.slack() >= 0))
}

fn loop_instance(seed: u64, keep: impl Fn(&Instance) -> bool) -> Instance {
    (seed * 1000..).map(random_instance).find(|i| keep(i)).unwrap()
}

#[test]
fn literal_form_has_the_same_argmin() {
    for seed in 0..60 {
        let mut inst = small(seed);
        inst.m_cpus = 2;
        let schedules = all_schedules(&inst);
        let offset = (4 - inst.lambda_quarters) * SLACK_LCM * (inst.m_cpus as i128 - 1) * inst.tasks.len() as i128;
        let mut best_literal = i128::MAX;
        let mut best_ours = i128::MAX;
        for d in &schedules {
            let ours = scaled_cost(&inst, d);
            let literal = literal_scaled(&inst, d);
            assert_eq!(literal, ours + offset);
            best_literal = best_literal.min(literal);
            best_ours = best_ours.min(ours);
        }
        let argmin_literal: Vec<_> = schedules.iter().filter(|d| literal_scaled(&inst, d) == best_literal).collect();
        let argmin_ours: Vec<_> = schedules.iter().filter(|d| scaled_cost(&inst, d) == best_ours).collect();
        assert_eq!(argmin_literal, argmin_ours, "seed {seed}");
    }
}

#[test]
fn float_value_matches_exact_value() {
    for seed in 0..200 {
        let inst = loop_instance(seed, |i| i.tasks.len() <= 5);
        for d in all_schedules(&inst).iter().take(500) {
            let schedule = Schedule::from_decisions(&inst.tasks, inst.m_cpus, d);
            let v = evaluate_objective(&schedule, &inst.tasks, inst.weights()).unwrap();
            let exact = scaled_cost(&inst, d) as f64 / inst.scale() as f64;
            assert!((v - exact).abs() <= 1e-12 * (1.0 + exact), "seed {seed}");
        }
    }
}

/// The delay term adds up normalized waits, so it can exceed 1.
#[test]
fn objective_is_not_bounded_by_one() {
    let tasks = TaskSet::new(
        (1..=3).map(|id| Task { id, user_id: 0, arrival: 0, proc_time: 1, deadline: 4 }).collect(),
        SlotDuration::MILLISECOND,
    )
    .unwrap();
    let s = Schedule::from_decisions(&tasks, 1, &[Some((1, 0)), Some((1, 2)), Some((1, 3))]);
    let v = evaluate_objective(&s, &tasks, ObjectiveWeights::new(1.0).unwrap()).unwrap();
    assert_eq!(v, 2.0 / 3.0 + 1.0);
}
