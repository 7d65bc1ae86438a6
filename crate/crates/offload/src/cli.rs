//! Command-line front end. Exit codes: 0 success, 1 runtime failure, 2 bad
//! flags or configuration.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use offload_core::ga::GaParams;
use offload_core::milp::{build_model, export_lp, Budget, SolveStatus};
use offload_core::workload::generate_workload;
use offload_core::{compute_metrics, ObjectiveWeights, SlotDuration, TaskSet};

use crate::bench::{bench_csv, bench_text, runtime_benchmark};
use crate::config::CliConfig;
use crate::csv_io::{history_to_csv, read_tasks, tasks_to_csv};
use crate::harness::{run_experiment, solve, Algorithm};
use crate::output::write_experiment;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "OFFLOAD_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "offload",
    version,
    about = "Deadline-constrained edge offloading: workloads, schedulers, experiments"
)]
struct Cli {
    /// Worker threads for experiments (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Progress on stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a task set and write it as CSV.
    Generate(GenerateArgs),
    /// Run one algorithm on one instance and print its metrics.
    Schedule(ScheduleArgs),
    /// Run a full replicated experiment and write result tables.
    Experiment(ExperimentArgs),
    /// Write the time-indexed integer program of an instance in LP format.
    ExportLp(ExportLpArgs),
    /// Measure solver runtime against instance size.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Workload parameters are taken from this configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    users: u32,
    #[arg(long, default_value_t = 5)]
    tasks_per_user: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Poisson rate per user, tasks per ms.
    #[arg(long)]
    arrival_rate: Option<f64>,
    #[arg(long)]
    slot_us: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Task CSV (task_id, user_id, arrival_ms, proc_ms, deadline_ms).
    #[arg(long)]
    instance: PathBuf,
    /// Slot length the instance times must be multiples of, in µs.
    #[arg(long, default_value_t = 1000)]
    slot_us: u64,
    #[arg(long, default_value_t = 2)]
    cpus: u32,
    /// Weight of the delay term; the dropped ratio gets 1 - lambda.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    #[arg(long)]
    algo: Algorithm,
    #[command(flatten)]
    instance: InstanceArgs,
    /// GA seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node budget of the exact solver (default: unlimited).
    #[arg(long)]
    node_budget: Option<u64>,
    /// Fail when the exact solver stops before proving optimality.
    #[arg(long)]
    require_optimal: bool,
    /// Also write the integer program in LP format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    /// Write the schedule as JSON.
    #[arg(long)]
    schedule_out: Option<PathBuf>,
    /// Write the GA best-objective history as CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON configuration; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration and the environment).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportLpArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// JSON configuration supplying workload, GA and budget settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "ga,milp")]
    algos: Vec<Algorithm>,
    #[arg(long, default_value_t = 3)]
    runs: u32,
    /// Node budget of the exact solver (default: from the configuration).
    #[arg(long)]
    node_budget: Option<u64>,
    /// Also write bench.csv into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Runs the command line `args` (program name first) against the process
/// stdout and stderr and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_to(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_cli_to<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Runtime(m)) = &f;
            let _ = writeln!(err, "error: {m}");
            f.code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build().map_err(runtime)?;
    match cli.command {
        Command::Generate(a) => generate(a, out),
        Command::Schedule(a) => schedule(a, cli.verbose, out, err),
        Command::Experiment(a) => experiment(a, &pool, cli.verbose, out, err),
        Command::ExportLp(a) => export(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| runtime(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(runtime),
    }
}

fn load_config(path: Option<&Path>) -> Result<CliConfig, Failure> {
    path.map_or_else(|| Ok(CliConfig::default()), |p| CliConfig::load(p).map_err(usage))
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut workload = load_config(a.config.as_deref())?.workload;
    if let Some(rate) = a.arrival_rate {
        workload.arrival_rate_per_ms = rate;
    }
    if let Some(slot) = a.slot_us {
        workload.slot_us = slot;
    }
    let config = workload.config(a.users, a.tasks_per_user, a.seed);
    config.validate().map_err(usage)?;
    let tasks = generate_workload(&config).map_err(runtime)?;
    write_or_print(a.out.as_deref(), &tasks_to_csv(&tasks), out)
}

fn load_instance(a: &InstanceArgs) -> Result<(TaskSet, ObjectiveWeights), Failure> {
    let slot = SlotDuration::from_micros(a.slot_us).map_err(usage)?;
    let weights = ObjectiveWeights::new(a.lambda).map_err(usage)?;
    if a.cpus == 0 {
        return Err(usage("--cpus must be at least 1"));
    }
    let file = fs::File::open(&a.instance).map_err(|e| usage(format!("{}: {e}", a.instance.display())))?;
    let tasks = read_tasks(file, slot).map_err(|e| usage(format!("{}: {e}", a.instance.display())))?;
    Ok((tasks, weights))
}

fn schedule(a: ScheduleArgs, verbose: u8, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    if a.history.is_some() && a.algo != Algorithm::Ga {
        return Err(usage("--history requires --algo ga"));
    }
    let (tasks, weights) = load_instance(&a.instance)?;
    let m = a.instance.cpus;
    if let Some(path) = &a.export_lp {
        let model = build_model(&tasks, m, weights).map_err(runtime)?;
        write_or_print(Some(path), &export_lp(&model), out)?;
    }
    let params = GaParams { seed: a.seed, ..GaParams::default() };
    let budget = a.node_budget.map_or(Budget::Unlimited, Budget::Nodes);
    let solved = solve(a.algo, &tasks, m, weights, &params, budget, None).map_err(runtime)?;
    let metrics = compute_metrics(&solved.schedule, &tasks, weights).map_err(runtime)?;
    let mut text = format!(
        "algorithm {}\ntasks {}\ncpus {m}\nlambda {}\nmean_delay_ms {}\ndropped_ratio {}\nobjective {}\nassigned {}\ndropped {}\n",
        a.algo, metrics.n_tasks, a.instance.lambda, metrics.mean_delay_ms, metrics.dropped_ratio, metrics.objective,
        metrics.n_assigned, metrics.n_dropped
    );
    if let (Some(status), Some(nodes)) = (solved.status, solved.nodes) {
        let status = serde_json::to_value(status).expect("serializable");
        text.push_str(&format!("status {}\nnodes {nodes}\n", status.as_str().unwrap_or_default()));
    }
    out.write_all(text.as_bytes()).map_err(runtime)?;
    if verbose > 0 {
        let _ = writeln!(err, "runtime {:.3} ms", solved.runtime_ms);
    }
    if let Some(path) = &a.schedule_out {
        let json = serde_json::to_string_pretty(&solved.schedule).expect("serializable") + "\n";
        write_or_print(Some(path), &json, out)?;
    }
    if let Some(path) = &a.history {
        let history = solved.fitness_history.as_deref().unwrap_or_default();
        write_or_print(Some(path), &history_to_csv(history), out)?;
    }
    if a.require_optimal && solved.status == Some(SolveStatus::BudgetExhausted) {
        return Err(runtime("node budget exhausted before optimality was proven"));
    }
    Ok(())
}

fn experiment(
    a: ExperimentArgs,
    pool: &rayon::ThreadPool,
    verbose: u8,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let config = load_config(a.config.as_deref())?;
    let scenario = config.scenario().map_err(usage)?;
    let dir = a.out.clone().unwrap_or_else(|| config.output_dir(std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)));
    let verbosity = verbose.max(config.verbosity);
    if verbosity > 0 {
        let _ = writeln!(
            err,
            "running {} cell(s) x {} run(s) x {} algorithm(s) on {} thread(s)",
            scenario.users.len() * scenario.tasks_per_user.len(),
            scenario.n_runs,
            scenario.algorithms.len(),
            pool.current_num_threads()
        );
    }
    let experiment = pool.install(|| run_experiment(&scenario)).map_err(runtime)?;
    if verbosity > 1 {
        for r in &experiment.records {
            let _ = writeln!(
                err,
                "users {} tasks/user {} run {} {}: objective {} dropped {}/{} ({:.1} ms)",
                r.users, r.tasks_per_user, r.run, r.algorithm, r.objective, r.n_dropped, r.n_tasks, r.runtime_ms
            );
        }
    }
    let paths = write_experiment(&dir, &experiment, &scenario.users, &scenario.tasks_per_user, &scenario.algorithms)
        .map_err(runtime)?;
    for p in paths {
        writeln!(out, "{}", p.display()).map_err(runtime)?;
    }
    Ok(())
}

fn export(a: ExportLpArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let (tasks, weights) = load_instance(&a.instance)?;
    let model = build_model(&tasks, a.instance.cpus, weights).map_err(runtime)?;
    write_or_print(a.out.as_deref(), &export_lp(&model), out)
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = load_config(a.config.as_deref())?;
    let mut scenario = config.scenario().map_err(usage)?;
    scenario.algorithms = a.algos;
    scenario.n_runs = a.runs;
    if let Some(n) = a.node_budget {
        scenario.milp_budget = Budget::Nodes(n);
    }
    scenario.validate().map_err(usage)?;
    if a.sizes.is_empty() || a.sizes.contains(&0) {
        return Err(usage("--sizes must list positive task counts"));
    }
    let rows = runtime_benchmark(&a.sizes, &scenario).map_err(runtime)?;
    out.write_all(bench_text(&rows).as_bytes()).map_err(runtime)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
        write_or_print(Some(&dir.join("bench.csv")), &bench_csv(&rows), out)?;
    }
    Ok(())
}
