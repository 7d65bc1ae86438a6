use offload_core::ga::{run_ga, GaParams};
use offload_core::greedy::{schedule_fcfs, schedule_stf};
use offload_core::milp::{build_model, solve_exact, Budget};
use offload_core::objective::compute_metrics;
use offload_core::{validate_schedule, ObjectiveWeights, Schedule, SlotDuration, Task, TaskSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tasks(rng: &mut ChaCha8Rng) -> TaskSet {
    let n = rng.random_range(0..=30);
    let users = rng.random_range(1..=5);
    let tasks = (0..n)
        .map(|i| {
            let arrival = rng.random_range(0..60);
            let proc_time = rng.random_range(1..=15);
            // occasionally infeasible from the start
            let slack = if rng.random_bool(0.1) { -rng.random_range(1..5) } else { rng.random_range(0..25) };
            Task {
                id: i + 1,
                user_id: rng.random_range(0..users),
                arrival,
                proc_time,
                deadline: arrival + proc_time + slack,
            }
        })
        .collect();
    TaskSet::new(tasks, SlotDuration::MILLISECOND).unwrap()
}

fn check(name: &str, seed: u64, schedule: &Schedule, tasks: &TaskSet, weights: ObjectiveWeights) {
    let violations = validate_schedule(schedule, tasks);
    assert!(violations.is_empty(), "{name} seed {seed}: {:?}", violations);
    let metrics = compute_metrics(schedule, tasks, weights).unwrap();
    assert_eq!(metrics.n_dropped + metrics.n_assigned, tasks.len());
    assert!(metrics.objective >= 0.0);
}

#[test]
fn every_algorithm_yields_valid_schedules() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for seed in 0..10_000u64 {
        let tasks = random_tasks(&mut rng);
        let m = rng.random_range(1..=4);
        let weights = ObjectiveWeights::new(rng.random_range(0..=4) as f64 / 4.0).unwrap();
        check("fcfs", seed, &schedule_fcfs(&tasks, m), &tasks, weights);
        check("stf", seed, &schedule_stf(&tasks, m), &tasks, weights);
        let params = GaParams { population: 6, generations: 3, seed, ..Default::default() };
        check("ga", seed, &run_ga(&tasks, m, weights, &params).unwrap().schedule, &tasks, weights);
        let model = build_model(&tasks, m, weights).unwrap();
        check("milp", seed, &solve_exact(&model, Budget::Nodes(200)).unwrap().schedule, &tasks, weights);
    }
}
