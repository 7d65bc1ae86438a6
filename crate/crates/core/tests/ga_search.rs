use offload_core::ga::{bits_per_task, decode, encode, run_ga, Chromosome, GaParams};
use offload_core::greedy::{schedule_fcfs, schedule_stf};
use offload_core::objective::schedule_cost;
use offload_core::workload::{generate_workload, WorkloadConfig};
use offload_core::{evaluate_objective, validate_schedule, ObjectiveWeights, SlotDuration, Task, TaskSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering::Greater;

fn half() -> ObjectiveWeights {
    ObjectiveWeights::new(0.5).unwrap()
}

fn i1() -> TaskSet {
    TaskSet::new(
        vec![
            Task { id: 1, user_id: 0, arrival: 0, proc_time: 5, deadline: 10 },
            Task { id: 2, user_id: 0, arrival: 0, proc_time: 2, deadline: 4 },
            Task { id: 3, user_id: 0, arrival: 1, proc_time: 2, deadline: 9 },
        ],
        SlotDuration::MILLISECOND,
    )
    .unwrap()
}

fn workload(seed: u64, users: u32, per_user: u32) -> TaskSet {
    generate_workload(&WorkloadConfig { n_users: users, tasks_per_user: per_user, seed, ..Default::default() }).unwrap()
}

#[test]
fn i1_examples() {
    let tasks = i1();
    let d = decode(&Chromosome::from_codes(&[0, 1, 1], 1), &tasks, 1, half()).unwrap();
    assert_eq!(d.schedule.decisions(&tasks).unwrap(), vec![None, Some((1, 0)), Some((1, 2))]);
    assert_eq!(d.cost.value(), 0.25);
    let out = run_ga(&tasks, 1, half(), &GaParams::default()).unwrap();
    assert!(out.objective <= 0.5 * (1.0 / 6.0 + 0.8));
}

#[test]
fn single_task_reaches_zero() {
    let tasks = TaskSet::new(
        vec![Task { id: 1, user_id: 0, arrival: 2, proc_time: 3, deadline: 9 }],
        SlotDuration::MILLISECOND,
    )
    .unwrap();
    for seed in 0..5 {
        let params = GaParams { seed, seed_with_greedy: false, ..Default::default() };
        assert_eq!(run_ga(&tasks, 2, half(), &params).unwrap().objective, 0.0);
    }
}

#[test]
fn history_is_monotone_and_complete() {
    let tasks = workload(3, 10, 5);
    let params = GaParams { generations: 40, seed: 9, ..Default::default() };
    let out = run_ga(&tasks, 2, half(), &params).unwrap();
    assert_eq!(out.fitness_history.len(), 41);
    assert!(out.fitness_history.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(*out.fitness_history.last().unwrap(), out.objective);
    assert_eq!(evaluate_objective(&out.schedule, &tasks, half()).unwrap().to_bits(), out.objective.to_bits());
}

#[test]
fn deterministic_per_seed() {
    let tasks = workload(4, 10, 5);
    let p = GaParams { generations: 20, seed: 5, ..Default::default() };
    let a = run_ga(&tasks, 2, half(), &p).unwrap();
    let b = run_ga(&tasks, 2, half(), &p).unwrap();
    assert_eq!(a.schedule, b.schedule);
    assert_eq!(a.fitness_history, b.fitness_history);
}

#[test]
fn never_worse_than_greedy() {
    for seed in 0..20 {
        let tasks = workload(seed, 10 + seed as u32, 3);
        for m in 1..=3 {
            let params = GaParams { population: 20, generations: 10, seed, ..Default::default() };
            let ga = run_ga(&tasks, m, half(), &params).unwrap().cost;
            for g in [schedule_fcfs(&tasks, m), schedule_stf(&tasks, m)] {
                let greedy = schedule_cost(&g, &tasks, half()).unwrap();
                assert_ne!(ga.compare(&greedy), Greater, "seed {seed} m {m}");
                let back = decode(&encode(&g, &tasks).unwrap(), &tasks, m, half()).unwrap().cost;
                assert_ne!(back.compare(&greedy), Greater, "seed {seed} m {m}");
            }
        }
    }
}

#[test]
fn random_chromosomes_decode_to_valid_schedules() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..10_000u64 {
        let m = rng.random_range(1..=4);
        let tasks = workload(k, rng.random_range(1..=6), rng.random_range(1..=4));
        let len = tasks.len() * bits_per_task(m);
        let chrom = Chromosome::from_bits((0..len).map(|_| rng.random()).collect());
        let d = decode(&chrom, &tasks, m, half()).unwrap();
        assert!(validate_schedule(&d.schedule, &tasks).is_empty());
        let direct = schedule_cost(&d.schedule, &tasks, half()).unwrap();
        assert_eq!(direct.exact(), d.cost.exact());
        // codes above M decode as drops
        for (i, task) in tasks.tasks().iter().enumerate() {
            if chrom.code(i, m) == 0 || chrom.code(i, m) > m {
                assert!(d.schedule.dropped.contains(&task.id));
            }
        }
    }
}

#[test]
fn rejects_wrong_length() {
    assert!(decode(&Chromosome::from_bits(vec![true; 5]), &i1(), 1, half()).is_err());
    assert!(run_ga(&i1(), 1, half(), &GaParams { population: 1, ..Default::default() }).is_err());
}
