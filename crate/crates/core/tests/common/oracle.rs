//! Exhaustive reference solver for tiny instances.
//!
//! Enumerates every drop subset, CPU choice and start slot, with integer
//! arithmetic only. Shared by the solver tests and the acceptance suite.
#![allow(dead_code)]

use offload_core::{ObjectiveWeights, Slot, SlotDuration, Task, TaskSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// lcm(1..=10): every admissible slack divides it.
pub const SLACK_LCM: i128 = 2520;
pub const MAX_SLACK: Slot = 10;

/// Weight as a multiple of 1/4, the only lambdas the oracle accepts.
pub const LAMBDA_QUARTERS: [i128; 5] = [0, 1, 2, 3, 4];

pub struct Instance {
    pub tasks: TaskSet,
    pub m_cpus: u32,
    pub lambda_quarters: i128,
}

impl Instance {
    pub fn weights(&self) -> ObjectiveWeights {
        ObjectiveWeights::new(self.lambda_quarters as f64 / 4.0).unwrap()
    }

    /// Denominator that makes every objective value an integer.
    pub fn scale(&self) -> i128 {
        4 * SLACK_LCM * self.tasks.len() as i128
    }
}

/// N ≤ 8, M ≤ 2, horizon ≤ 50 slots. A few tasks have negative slack.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=8u32);
    // a short span packs arrivals and forces contention
    let span = rng.random_range(0..=30);
    let tasks = (0..n)
        .map(|id| {
            let arrival = rng.random_range(0..=span);
            let proc_time = rng.random_range(1..=8);
            let slack = if rng.random_bool(0.1) { -rng.random_range(1..=3) } else { rng.random_range(0..=MAX_SLACK) };
            Task { id: id + 1, user_id: id % 3, arrival, proc_time, deadline: arrival + proc_time + slack }
        })
        .collect();
    Instance {
        tasks: TaskSet::new(tasks, SlotDuration::MILLISECOND).unwrap(),
        m_cpus: rng.random_range(1..=2),
        lambda_quarters: LAMBDA_QUARTERS[rng.random_range(0..5)],
    }
}

/// Optimal objective times [`Instance::scale`], and one optimal decision
/// vector in `TaskSet` order.
pub fn brute_force(inst: &Instance) -> (i128, Vec<Option<(u32, Slot)>>) {
    let tasks = inst.tasks.tasks();
    let n = tasks.len() as i128;
    let lq = inst.lambda_quarters;
    let drop = (4 - lq) * SLACK_LCM;
    let wait = |t: &Task, w: Slot| -> i128 {
        if w == 0 {
            0
        } else {
            lq * n * w as i128 * (SLACK_LCM / t.slack() as i128)
        }
    };

    struct Ctx<'a> {
        tasks: &'a [Task],
        m: u32,
        busy: Vec<Vec<(Slot, Slot)>>,
        current: Vec<Option<(u32, Slot)>>,
        best: i128,
        best_choice: Vec<Option<(u32, Slot)>>,
    }

    fn go(ctx: &mut Ctx, k: usize, partial: i128, drop: i128, wait: &dyn Fn(&Task, Slot) -> i128) {
        if partial >= ctx.best {
            return;
        }
        if k == ctx.tasks.len() {
            ctx.best = partial;
            ctx.best_choice = ctx.current.clone();
            return;
        }
        let t = ctx.tasks[k];
        ctx.current[k] = None;
        go(ctx, k + 1, partial + drop, drop, wait);
        // CPUs are interchangeable: open them in index order
        let used = ctx.busy.iter().filter(|b| !b.is_empty()).count() as u32;
        for cpu in 1..=ctx.m.min(used + 1) {
            for start in t.arrival..=t.deadline - t.proc_time {
                let end = start + t.proc_time;
                let lane = &ctx.busy[cpu as usize - 1];
                if lane.iter().any(|&(s, e)| start < e && s < end) {
                    continue;
                }
                ctx.busy[cpu as usize - 1].push((start, end));
                ctx.current[k] = Some((cpu, start));
                go(ctx, k + 1, partial + wait(&t, start - t.arrival), drop, wait);
                ctx.busy[cpu as usize - 1].pop();
            }
        }
        ctx.current[k] = None;
    }

    let mut ctx = Ctx {
        tasks,
        m: inst.m_cpus,
        busy: vec![Vec::new(); inst.m_cpus as usize],
        current: vec![None; tasks.len()],
        best: i128::MAX,
        best_choice: Vec::new(),
    };
    go(&mut ctx, 0, 0, drop, &wait);
    (ctx.best, ctx.best_choice)
}

/// Exact scaled value of a decision vector, for cross-checking.
pub fn scaled_cost(inst: &Instance, decisions: &[Option<(u32, Slot)>]) -> i128 {
    let n = inst.tasks.len() as i128;
    inst.tasks
        .tasks()
        .iter()
        .zip(decisions)
        .map(|(t, d)| match d {
            None => (4 - inst.lambda_quarters) * SLACK_LCM,
            Some((_, s)) if *s == t.arrival => 0,
            Some((_, s)) => inst.lambda_quarters * n * (*s - t.arrival) as i128 * (SLACK_LCM / t.slack() as i128),
        })
        .sum()
}
