//! Replicated experiments over a (users × tasks per user) grid.

use std::fmt;
use std::time::Instant;

use offload_core::ga::{run_ga, GaParams};
use offload_core::greedy::{schedule_fcfs, schedule_stf};
use offload_core::milp::{build_model, solve_exact_with, Budget, SolveOptions, SolveStatus};
use offload_core::workload::{generate_workload, Distribution, WorkloadConfig};
use offload_core::{compute_metrics, confidence_interval, ObjectiveWeights, Schedule, TaskSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csv_io::task_set_hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fcfs,
    Stf,
    Ga,
    Milp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Fcfs, Algorithm::Stf, Algorithm::Ga, Algorithm::Milp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fcfs => "fcfs",
            Algorithm::Stf => "stf",
            Algorithm::Ga => "ga",
            Algorithm::Milp => "milp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm {s:?} (expected fcfs, stf, ga or milp)"))
    }
}

/// Workload parameters shared by every grid cell; the cell fixes the user and
/// task counts and the run fixes the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadParams {
    pub arrival_rate_per_ms: f64,
    pub packet_bits: u64,
    pub datarate_bits_per_ms: u64,
    pub proc_time_ms: Distribution,
    pub slack_factor: Distribution,
    pub slot_us: u64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        let d = WorkloadConfig::default();
        WorkloadParams {
            arrival_rate_per_ms: d.arrival_rate_per_ms,
            packet_bits: d.packet_bits,
            datarate_bits_per_ms: d.datarate_bits_per_ms,
            proc_time_ms: d.proc_time_ms,
            slack_factor: d.slack_factor,
            slot_us: d.slot_us,
        }
    }
}

impl WorkloadParams {
    pub fn config(&self, n_users: u32, tasks_per_user: u32, seed: u64) -> WorkloadConfig {
        WorkloadConfig {
            n_users,
            tasks_per_user,
            arrival_rate_per_ms: self.arrival_rate_per_ms,
            packet_bits: self.packet_bits,
            datarate_bits_per_ms: self.datarate_bits_per_ms,
            proc_time_ms: self.proc_time_ms,
            slack_factor: self.slack_factor,
            slot_us: self.slot_us,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub users: Vec<u32>,
    pub tasks_per_user: Vec<u32>,
    pub workload: WorkloadParams,
    pub m_cpus: u32,
    pub weights: ObjectiveWeights,
    /// Run in canonical order regardless of how they were listed.
    pub algorithms: Vec<Algorithm>,
    pub n_runs: u32,
    /// Run `r` uses workload seed `base_seed + r`.
    pub base_seed: u64,
    /// `seed` is an offset added to the run seed.
    pub ga_params: GaParams,
    pub milp_budget: Budget,
    pub confidence_level: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            users: vec![20],
            tasks_per_user: vec![5],
            workload: WorkloadParams::default(),
            m_cpus: 2,
            weights: ObjectiveWeights::new(0.5).expect("valid lambda"),
            algorithms: Algorithm::ALL.to_vec(),
            n_runs: 10,
            base_seed: 0,
            ga_params: GaParams::default(),
            milp_budget: Budget::Nodes(2_000_000),
            confidence_level: 0.95,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(
        "{algorithm} produced an invalid schedule (users {users}, tasks/user {tasks_per_user}, seed {seed}): {detail}"
    )]
    InvalidSchedule { algorithm: Algorithm, users: u32, tasks_per_user: u32, seed: u64, detail: String },
    #[error("{algorithm} saw a different task set than fcfs for seed {seed}")]
    Fairness { algorithm: Algorithm, seed: u64 },
    #[error(transparent)]
    Core(#[from] offload_core::Error),
}

impl Scenario {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidScenario(m.into()));
        if self.users.is_empty() || self.tasks_per_user.is_empty() {
            return bad("users and tasks_per_user must be non-empty");
        }
        if self.users.contains(&0) || self.tasks_per_user.contains(&0) {
            return bad("grid values must be at least 1");
        }
        if self.m_cpus == 0 {
            return bad("m_cpus must be at least 1");
        }
        if self.n_runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required");
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return bad("confidence_level must lie in (0, 1)");
        }
        self.ga_params.validate()?;
        self.workload.config(1, 1, 0).validate()?;
        Ok(())
    }

    fn sorted_algorithms(&self) -> Vec<Algorithm> {
        let mut a = self.algorithms.clone();
        a.sort_unstable();
        a.dedup();
        a
    }

    fn sorted_grid(values: &[u32]) -> Vec<u32> {
        let mut v = values.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn seed(&self, run: u32) -> u64 {
        self.base_seed.wrapping_add(u64::from(run))
    }
}

/// One algorithm on one generated instance, kept before aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub users: u32,
    pub tasks_per_user: u32,
    pub run: u32,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub task_set_sha256: String,
    pub n_tasks: usize,
    pub n_assigned: usize,
    pub n_dropped: usize,
    /// 0 when no task completed.
    pub mean_delay_ms: f64,
    pub dropped_ratio: f64,
    pub objective: f64,
    /// Exact solver only.
    pub status: Option<SolveStatus>,
    pub nodes: Option<u64>,
    /// Wall clock; kept out of the deterministic outputs.
    #[serde(skip)]
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanDelayMs,
    DroppedRatio,
    Objective,
    RuntimeMs,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::MeanDelayMs, Metric::DroppedRatio, Metric::Objective, Metric::RuntimeMs];

    pub fn name(self) -> &'static str {
        match self {
            Metric::MeanDelayMs => "mean_delay_ms",
            Metric::DroppedRatio => "dropped_ratio",
            Metric::Objective => "objective",
            Metric::RuntimeMs => "runtime_ms",
        }
    }

    fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::MeanDelayMs => r.mean_delay_ms,
            Metric::DroppedRatio => r.dropped_ratio,
            Metric::Objective => r.objective,
            Metric::RuntimeMs => r.runtime_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub users: u32,
    pub tasks_per_user: u32,
    pub algorithm: Algorithm,
    pub metric: Metric,
    pub mean: f64,
    /// `None` when there are fewer than two samples.
    pub ci_half_width: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn get(&self, users: u32, tasks_per_user: u32, algorithm: Algorithm, metric: Metric) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.users == users && r.tasks_per_user == tasks_per_user && r.algorithm == algorithm && r.metric == metric
        })
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub records: Vec<RunRecord>,
    pub table: ResultTable,
}

/// Result of one algorithm on one instance.
#[derive(Debug, Clone)]
pub struct Solved {
    pub schedule: Schedule,
    pub status: Option<SolveStatus>,
    pub nodes: Option<u64>,
    pub fitness_history: Option<Vec<f64>>,
    pub runtime_ms: f64,
}

/// Runs one algorithm. The exact solver starts from `warm_start` when given.
pub fn solve(
    algorithm: Algorithm,
    tasks: &TaskSet,
    m_cpus: u32,
    weights: ObjectiveWeights,
    ga_params: &GaParams,
    milp_budget: Budget,
    warm_start: Option<&Schedule>,
) -> Result<Solved, offload_core::Error> {
    let start = Instant::now();
    let mut solved = Solved {
        schedule: Schedule::empty(tasks, m_cpus),
        status: None,
        nodes: None,
        fitness_history: None,
        runtime_ms: 0.0,
    };
    match algorithm {
        Algorithm::Fcfs => solved.schedule = schedule_fcfs(tasks, m_cpus),
        Algorithm::Stf => solved.schedule = schedule_stf(tasks, m_cpus),
        Algorithm::Ga => {
            let out = run_ga(tasks, m_cpus, weights, ga_params)?;
            solved.schedule = out.schedule;
            solved.fitness_history = Some(out.fitness_history);
        }
        Algorithm::Milp => {
            let model = build_model(tasks, m_cpus, weights)?;
            let options = SolveOptions { budget: milp_budget, warm_starts: warm_start.into_iter().cloned().collect() };
            let out = solve_exact_with(&model, &options, || false)?;
            solved.schedule = out.schedule;
            solved.status = Some(out.status);
            solved.nodes = Some(out.nodes);
        }
    }
    solved.runtime_ms = start.elapsed().as_secs_f64() * 1000.0;
    Ok(solved)
}

fn run_cell(scenario: &Scenario, users: u32, tasks_per_user: u32, run: u32) -> Result<Vec<RunRecord>, HarnessError> {
    let seed = scenario.seed(run);
    let tasks = generate_workload(&scenario.workload.config(users, tasks_per_user, seed))?;
    let hash = task_set_hash(&tasks);
    let ga_params = GaParams { seed: scenario.ga_params.seed.wrapping_add(seed), ..scenario.ga_params.clone() };
    let mut ga_schedule = None;
    let mut records = Vec::new();
    for algorithm in scenario.sorted_algorithms() {
        let invalid = |detail: String| HarnessError::InvalidSchedule { algorithm, users, tasks_per_user, seed, detail };
        let solved = solve(
            algorithm,
            &tasks,
            scenario.m_cpus,
            scenario.weights,
            &ga_params,
            scenario.milp_budget,
            ga_schedule.as_ref(),
        )
        .map_err(|e| invalid(e.to_string()))?;
        if task_set_hash(&tasks) != hash {
            return Err(HarnessError::Fairness { algorithm, seed });
        }
        let metrics =
            compute_metrics(&solved.schedule, &tasks, scenario.weights).map_err(|e| invalid(e.to_string()))?;
        records.push(RunRecord {
            users,
            tasks_per_user,
            run,
            seed,
            algorithm,
            task_set_sha256: hash.clone(),
            n_tasks: metrics.n_tasks,
            n_assigned: metrics.n_assigned,
            n_dropped: metrics.n_dropped,
            mean_delay_ms: metrics.mean_delay_ms,
            dropped_ratio: metrics.dropped_ratio,
            objective: metrics.objective,
            status: solved.status,
            nodes: solved.nodes,
            runtime_ms: solved.runtime_ms,
        });
        if algorithm == Algorithm::Ga {
            ga_schedule = Some(solved.schedule);
        }
    }
    Ok(records)
}

/// Generates every (cell, run) instance, runs each selected algorithm on it and
/// aggregates. Runs execute on the current rayon pool; the output does not
/// depend on its size (apart from `runtime_ms`).
pub fn run_experiment(scenario: &Scenario) -> Result<Experiment, HarnessError> {
    scenario.validate()?;
    let mut jobs = Vec::new();
    for &u in &Scenario::sorted_grid(&scenario.users) {
        for &k in &Scenario::sorted_grid(&scenario.tasks_per_user) {
            for r in 0..scenario.n_runs {
                jobs.push((u, k, r));
            }
        }
    }
    let results: Vec<Result<Vec<RunRecord>, HarnessError>> =
        jobs.par_iter().map(|&(u, k, r)| run_cell(scenario, u, k, r)).collect();
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    let table = aggregate(&records, scenario.confidence_level)?;
    Ok(Experiment { records, table })
}

/// Builds the result table from raw records. Rows are ordered by users, tasks
/// per user, algorithm and metric; samples enter in run order.
pub fn aggregate(records: &[RunRecord], level: f64) -> Result<ResultTable, offload_core::Error> {
    let mut keys: Vec<(u32, u32, Algorithm)> =
        records.iter().map(|r| (r.users, r.tasks_per_user, r.algorithm)).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut rows = Vec::new();
    for (users, tasks_per_user, algorithm) in keys {
        let mut cell: Vec<&RunRecord> = records
            .iter()
            .filter(|r| r.users == users && r.tasks_per_user == tasks_per_user && r.algorithm == algorithm)
            .collect();
        cell.sort_by_key(|r| r.run);
        for metric in Metric::ALL {
            let samples: Vec<f64> = cell.iter().map(|r| metric.of(r)).collect();
            let (mean, ci_half_width) = if samples.len() >= 2 {
                let ci = confidence_interval(&samples, level)?;
                (ci.mean, Some(ci.half_width))
            } else {
                (samples[0], None)
            };
            rows.push(ResultRow { users, tasks_per_user, algorithm, metric, mean, ci_half_width, n: samples.len() });
        }
    }
    Ok(ResultTable { rows })
}
