use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use carp_core::harness::{
    generate_instance, read_runs_csv, run_experiment, significance_table, summarize, write_summary_csv, Budget,
    ExperimentSpec, Outcome,
};
use carp_core::search::ConfigError;
use carp_core::{
    load_instance_file, read_solution, solve, validate, write_instance, write_solution, Algorithm, ClockMode,
    Problem, SearchConfig, SearchTrace,
};

#[derive(Parser)]
#[command(name = "carp", version, about = "Capacitated arc routing with route cutting off")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance.
    Solve(SolveArgs),
    /// Run a multi-instance, multi-variant experiment.
    Bench {
        spec: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Overrides the spec's worker count.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Summaries and win/draw/loss tables for an experiment directory.
    Stats {
        dir: PathBuf,
        #[arg(long)]
        reference: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Write a random instance.
    Gen {
        #[arg(long)]
        vertices: usize,
        #[arg(long)]
        tasks: usize,
        #[arg(long)]
        capacity: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution file; exits 0 iff it is feasible.
    Validate { instance: PathBuf, solution: PathBuf },
}

#[derive(clap::Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, default_value = "sahid-rco")]
    algorithm: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    /// `per-knodes:<seconds>` or plain seconds; overrides --time-limit.
    #[arg(long)]
    budget: Option<Budget>,
    /// Multiplies the time limit.
    #[arg(long, default_value_t = 1.0)]
    time_scale: f64,
    #[arg(long, default_value = "wall")]
    clock: ClockMode,
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    #[arg(long, default_value_t = 0.2)]
    theta: f64,
    #[arg(long, default_value_t = 2)]
    groups: usize,
    #[arg(long, default_value_t = 5.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    scale: f64,
    #[arg(long, default_value_t = 1.10)]
    accept: f64,
    #[arg(long, default_value_t = 10_000)]
    idle: u64,
    #[arg(long, default_value_t = 50)]
    cycles: u64,
    /// Stop after this many iterations without a new best.
    #[arg(long)]
    stall: Option<u64>,
    /// Move evaluations per local search call.
    #[arg(long)]
    sub_budget: Option<u64>,
    /// Stream `elapsed_ms,best_cost` rows here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Solution file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench { spec, out_dir, workers } => cmd_bench(&spec, out_dir, workers),
        Command::Stats { dir, reference, alpha } => cmd_stats(&dir, reference, alpha),
        Command::Gen {
            vertices,
            tasks,
            capacity,
            seed,
            out,
        } => {
            let inst = generate_instance(vertices, tasks, capacity, seed)?;
            emit(out.as_deref(), &write_instance(&inst))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { instance, solution } => cmd_validate(&instance, &solution),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode> {
    let algorithm: Algorithm = a.algorithm.parse()?;
    let instance = load_instance_file(&a.instance).with_context(|| format!("loading {}", a.instance.display()))?;
    let base = a.budget.map_or(a.time_limit, |b| b.seconds_for(&instance));
    let config = SearchConfig {
        algorithm,
        rco: carp_core::RcoParams::new(a.lambda, a.theta)?,
        cluster: carp_core::decomposition::ClusterConfig::new(a.groups, a.alpha)?,
        scale: a.scale,
        accept_threshold: a.accept,
        idle_limit: a.idle,
        max_cycles: a.cycles,
        time_limit: base * a.time_scale,
        seed: a.seed,
        sub_solver_budget: a.sub_budget,
        clock: a.clock,
        stall_limit: a.stall,
        ..SearchConfig::default()
    };
    config.validate()?;
    let problem = Problem::new(instance);
    let trace = match &a.trace {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            SearchTrace::with_sink(Box::new(BufWriter::new(f)))
        }
        None => SearchTrace::new(),
    };
    let out = solve(&problem, &config, trace).map_err(|e: ConfigError| anyhow::anyhow!(e))?;
    emit(a.out.as_deref(), &write_solution(&out.solution, &problem.instance))?;
    eprintln!(
        "{}: cost {} with {} routes after {} iterations ({} ms)",
        problem.instance.name,
        out.solution.total_cost(),
        out.solution.routes().len(),
        out.trace.iterations,
        out.trace.points.last().map_or(0, |p| p.elapsed_ms)
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(spec_path: &Path, out_dir: Option<PathBuf>, workers: Option<usize>) -> Result<ExitCode> {
    let text = fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let base = spec_path.parent().unwrap_or(Path::new("."));
    let mut spec = ExperimentSpec::parse(&text, base)?;
    if let Some(d) = out_dir {
        spec.out_dir = d;
    }
    if let Some(w) = workers {
        spec.workers = w.max(1);
    }
    let records = run_experiment(&spec)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    println!("{}", format_summary(&summarize(&records)));
    println!("{} runs, {} failed; results in {}", records.len(), failed, spec.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn format_summary(rows: &[carp_core::harness::SummaryRow]) -> String {
    let mut out = format!(
        "{:<24} {:<20} {:>5} {:>14} {:>12} {:>10} {:>10}\n",
        "instance", "variant", "runs", "mean", "std", "best", "worst"
    );
    for r in rows {
        let opt = |c: Option<i64>| c.map_or("-".to_string(), |c| c.to_string());
        out.push_str(&format!(
            "{:<24} {:<20} {:>5} {:>14.2} {:>12.2} {:>10} {:>10}{}\n",
            r.instance,
            r.variant,
            r.runs,
            r.mean,
            r.std,
            opt(r.best),
            opt(r.worst),
            if r.single_run { "  (single run)" } else { "" }
        ));
    }
    out
}

fn cmd_stats(dir: &Path, reference: Option<String>, alpha: f64) -> Result<ExitCode> {
    let records = read_runs_csv(&dir.join("runs.csv")).with_context(|| format!("reading {}/runs.csv", dir.display()))?;
    let summary = summarize(&records);
    write_summary_csv(&summary, &dir.join("summary.csv"))?;
    println!("{}", format_summary(&summary));

    let Some(reference) = reference else {
        return Ok(ExitCode::SUCCESS);
    };
    let rows = significance_table(&records, &reference, alpha)?;
    let mut csv = String::from("reference,variant,instance,reference_mean,other_mean,p_value,outcome\n");
    println!("{reference} against (alpha {alpha}):");
    println!("{:<20} {:>4} {:>4} {:>4}", "variant", "W", "D", "L");
    for row in &rows {
        println!("{:<20} {:>4} {:>4} {:>4}", row.variant, row.wins, row.draws, row.losses);
        for c in &row.comparisons {
            let o = match c.outcome {
                Outcome::Win => "W",
                Outcome::Draw => "D",
                Outcome::Loss => "L",
            };
            csv.push_str(&format!(
                "{reference},{},{},{},{},{},{o}\n",
                row.variant, c.instance, c.reference_mean, c.other_mean, c.p_value
            ));
        }
    }
    fs::write(dir.join("wdl.csv"), csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(instance: &Path, solution: &Path) -> Result<ExitCode> {
    let inst = load_instance_file(instance).with_context(|| format!("loading {}", instance.display()))?;
    let dist = carp_core::shortest_paths(&inst);
    let file = File::open(solution).with_context(|| format!("opening {}", solution.display()))?;
    let read = match read_solution(file, &inst, &dist) {
        Ok(r) => r,
        Err(e) => {
            println!("infeasible: {e}");
            return Ok(ExitCode::FAILURE);
        }
    };
    let report = validate(&read.solution, &inst);
    for v in &report.violations {
        println!("violation: {v}");
    }
    let cost = read.solution.total_cost();
    if read.declared_cost != cost {
        println!("warning: declared cost {} but routes cost {}", read.declared_cost, cost);
    }
    if report.is_feasible() {
        println!("feasible: cost {cost}, {} routes", read.solution.routes().len());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}

