//! Solver runtime versus instance size.

use offload_core::ga::GaParams;
use offload_core::milp::SolveStatus;
use offload_core::workload::generate_workload;
use serde::Serialize;

use crate::harness::{solve, Algorithm, HarnessError, Scenario};

/// Published runtimes (MILP, GA) by task count. Shown for qualitative
/// comparison only: they depend on an undisclosed workload, solver and machine.
pub const PUBLISHED_RUNTIMES: [(usize, &str, &str); 5] = [
    (10, "42.2 ms", "62.5 ms"),
    (50, "90.8 ms", "1.8 s"),
    (100, "3.8 s", "4.6 s"),
    (500, "11.6 s", "19.5 s"),
    (1000, "21.8 s", "30.5 s"),
];

pub fn published_runtime(n_tasks: usize, algorithm: Algorithm) -> Option<&'static str> {
    let (_, milp, ga) = PUBLISHED_RUNTIMES.iter().find(|(n, _, _)| *n == n_tasks)?;
    match algorithm {
        Algorithm::Milp => Some(milp),
        Algorithm::Ga => Some(ga),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_tasks: usize,
    pub algorithm: Algorithm,
    pub runs: u32,
    pub mean_runtime_ms: f64,
    /// Exact solver runs that hit the node budget.
    pub budget_exhausted: Option<u32>,
    pub published: Option<&'static str>,
}

/// Times each selected algorithm on `template.n_runs` instances of every size
/// (one task per user). Runs are sequential so timings do not compete.
pub fn runtime_benchmark(sizes: &[usize], template: &Scenario) -> Result<Vec<BenchRow>, HarnessError> {
    template.validate()?;
    let mut algorithms = template.algorithms.clone();
    algorithms.sort_unstable();
    algorithms.dedup();
    let mut rows = Vec::new();
    for &n in sizes {
        let users = u32::try_from(n).ok().filter(|&u| u > 0).ok_or_else(|| {
            HarnessError::InvalidScenario(format!("benchmark size {n} must be between 1 and {}", u32::MAX))
        })?;
        for &algorithm in &algorithms {
            let mut total_ms = 0.0;
            let mut exhausted = 0;
            for run in 0..template.n_runs {
                let seed = template.seed(run);
                let tasks = generate_workload(&template.workload.config(users, 1, seed))?;
                let params =
                    GaParams { seed: template.ga_params.seed.wrapping_add(seed), ..template.ga_params.clone() };
                let solved =
                    solve(algorithm, &tasks, template.m_cpus, template.weights, &params, template.milp_budget, None)?;
                total_ms += solved.runtime_ms;
                exhausted += u32::from(solved.status == Some(SolveStatus::BudgetExhausted));
            }
            rows.push(BenchRow {
                n_tasks: n,
                algorithm,
                runs: template.n_runs,
                mean_runtime_ms: total_ms / f64::from(template.n_runs),
                budget_exhausted: (algorithm == Algorithm::Milp).then_some(exhausted),
                published: published_runtime(n, algorithm),
            });
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("n_tasks,algorithm,runs,mean_runtime_ms,budget_exhausted,published\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.3},{},{}\n",
            r.n_tasks,
            r.algorithm,
            r.runs,
            r.mean_runtime_ms,
            r.budget_exhausted.map(|e| e.to_string()).unwrap_or_default(),
            r.published.unwrap_or("")
        ));
    }
    out
}

pub fn bench_text(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:>8}  {:<9} {:>5} {:>16} {:>10}  {}\n",
        "tasks", "algorithm", "runs", "mean runtime", "exhausted", "published"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>8}  {:<9} {:>5} {:>13.3} ms {:>10}  {}\n",
            r.n_tasks,
            r.algorithm,
            r.runs,
            r.mean_runtime_ms,
            r.budget_exhausted.map(|e| e.to_string()).unwrap_or_else(|| "-".into()),
            r.published.unwrap_or("-")
        ));
    }
    out.push_str(
        "note: published runtimes come from different hardware, solver and workload; \
         they are not reproduction targets.\n",
    );
    out
}
