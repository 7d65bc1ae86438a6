//! Result files: tables, raw runs and plot-ready data.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::harness::{Algorithm, Experiment, Metric, ResultRow, ResultTable, RunRecord};

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("missing grid cells: {}", .0.join(", "))]
    MissingCells(Vec<String>),
    #[error("empty result table")]
    EmptyTable,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn to_csv<T: Serialize>(rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<String, OutputError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

const TABLE_HEADER: [&str; 7] = ["users", "tasks_per_user", "algorithm", "metric", "mean", "ci_half_width", "n"];

fn rows_where(table: &ResultTable, runtime: bool) -> impl Iterator<Item = &ResultRow> {
    table.rows.iter().filter(move |r| (r.metric == Metric::RuntimeMs) == runtime)
}

/// Quality metrics (everything but runtime).
pub fn results_csv(table: &ResultTable) -> Result<String, OutputError> {
    to_csv(rows_where(table, false), &TABLE_HEADER)
}

/// Same rows and fields as [`results_csv`].
pub fn results_json(table: &ResultTable) -> String {
    let rows: Vec<&ResultRow> = rows_where(table, false).collect();
    let mut s = serde_json::to_string_pretty(&serde_json::json!({ "rows": rows })).expect("serializable");
    s.push('\n');
    s
}

/// Mean wall-clock runtimes; machine dependent, so kept apart.
pub fn timings_csv(table: &ResultTable) -> Result<String, OutputError> {
    to_csv(rows_where(table, true), &TABLE_HEADER)
}

const RAW_HEADER: [&str; 14] = [
    "users",
    "tasks_per_user",
    "run",
    "seed",
    "algorithm",
    "task_set_sha256",
    "n_tasks",
    "n_assigned",
    "n_dropped",
    "mean_delay_ms",
    "dropped_ratio",
    "objective",
    "status",
    "nodes",
];

pub fn raw_runs_csv(records: &[RunRecord]) -> Result<String, OutputError> {
    to_csv(records, &RAW_HEADER)
}

pub fn read_raw_runs(text: &str) -> Result<Vec<RunRecord>, OutputError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<RunRecord>, _>>()?)
}

/// A file name and its contents.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotFile {
    pub name: String,
    pub contents: String,
}

#[derive(Serialize)]
struct PlotRow {
    users: u32,
    algorithm: Algorithm,
    mean: f64,
    ci_half_width: Option<f64>,
}

/// One CSV per tasks-per-user value with columns users, algorithm, mean and
/// ci_half_width. Every (users, tasks per user, algorithm) cell must be present.
pub fn emit_plot_data(
    table: &ResultTable,
    metric: Metric,
    users: &[u32],
    tasks_per_user: &[u32],
    algorithms: &[Algorithm],
) -> Result<Vec<PlotFile>, OutputError> {
    if table.rows.is_empty() {
        return Err(OutputError::EmptyTable);
    }
    let sorted = |v: &[u32]| {
        let mut v = v.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut algos = algorithms.to_vec();
    algos.sort_unstable();
    algos.dedup();
    let mut missing = Vec::new();
    let mut files = Vec::new();
    for k in sorted(tasks_per_user) {
        let mut rows = Vec::new();
        for u in sorted(users) {
            for &a in &algos {
                match table.get(u, k, a, metric) {
                    Some(r) => {
                        rows.push(PlotRow { users: u, algorithm: a, mean: r.mean, ci_half_width: r.ci_half_width })
                    }
                    None => missing.push(format!("(users {u}, tasks/user {k}, {a})")),
                }
            }
        }
        let contents = to_csv(rows, &["users", "algorithm", "mean", "ci_half_width"])?;
        files.push(PlotFile { name: format!("plot_{}_tasks{k}.csv", metric.name()), contents });
    }
    if !missing.is_empty() {
        return Err(OutputError::MissingCells(missing));
    }
    Ok(files)
}

/// Writes every output of an experiment into `dir` and returns the paths.
pub fn write_experiment(
    dir: &Path,
    experiment: &Experiment,
    users: &[u32],
    tasks_per_user: &[u32],
    algorithms: &[Algorithm],
) -> Result<Vec<PathBuf>, OutputError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| OutputError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files = vec![
        PlotFile { name: "results.csv".into(), contents: results_csv(&experiment.table)? },
        PlotFile { name: "results.json".into(), contents: results_json(&experiment.table) },
        PlotFile { name: "raw_runs.csv".into(), contents: raw_runs_csv(&experiment.records)? },
        PlotFile { name: "timings.csv".into(), contents: timings_csv(&experiment.table)? },
    ];
    for metric in [Metric::MeanDelayMs, Metric::DroppedRatio] {
        files.extend(emit_plot_data(&experiment.table, metric, users, tasks_per_user, algorithms)?);
    }
    let mut paths = Vec::new();
    for f in files {
        let path = dir.join(&f.name);
        fs::write(&path, f.contents).map_err(io(&path))?;
        paths.push(path);
    }
    Ok(paths)
}
