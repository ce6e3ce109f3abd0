//! Seeded multi-run experiments.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::ClusterConfig;
use crate::graph::{Cost, Instance};
use crate::io::{load_instance_file, write_solution, LoadError};
use crate::problem::Problem;
use crate::rco::RcoParams;
use crate::search::{solve, Algorithm, SearchConfig, SearchTrace};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("no instances listed")]
    NoInstances,
    #[error("no variants listed")]
    NoVariants,
    #[error("duplicate variant label `{0}`")]
    DuplicateVariant(String),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {source}")]
    Load { path: PathBuf, source: LoadError },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// How long each run may take.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Seconds(f64),
    /// Seconds per thousand vertices of the instance.
    PerKnodes(f64),
}

impl Budget {
    pub fn seconds_for(&self, instance: &Instance) -> f64 {
        match *self {
            Budget::Seconds(s) => s,
            Budget::PerKnodes(s) => s * instance.vertex_count as f64 / 1000.0,
        }
    }
}

impl FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (per_knodes, num) = match s.strip_prefix("per-knodes:") {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let v: f64 = num.trim().parse().map_err(|_| format!("bad budget `{s}`"))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(format!("budget must be positive, got `{s}`"));
        }
        Ok(if per_knodes { Budget::PerKnodes(v) } else { Budget::Seconds(v) })
    }
}

/// Sets one named search parameter from text.
pub fn apply_param(config: &mut SearchConfig, key: &str, value: &str) -> Result<(), String> {
    fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
        value.parse().map_err(|_| format!("bad value `{value}` for {key}"))
    }
    match key {
        "lambda" => config.rco = RcoParams::new(num(key, value)?, config.rco.theta()).map_err(|e| e.to_string())?,
        "theta" => config.rco = RcoParams::new(config.rco.lambda(), num(key, value)?).map_err(|e| e.to_string())?,
        "groups" => {
            config.cluster = ClusterConfig::new(num(key, value)?, config.cluster.fuzziness()).map_err(|e| e.to_string())?
        }
        "alpha" => {
            config.cluster = ClusterConfig::new(config.cluster.groups(), num(key, value)?).map_err(|e| e.to_string())?
        }
        "scale" => config.scale = num(key, value)?,
        "accept" => config.accept_threshold = num(key, value)?,
        "idle" => config.idle_limit = num(key, value)?,
        "cycles" => config.max_cycles = num(key, value)?,
        "pool" => config.pool_size = num(key, value)?,
        "sub_budget" => config.sub_solver_budget = Some(num(key, value)?),
        "stall" => config.stall_limit = Some(num(key, value)?),
        "max_iterations" => config.max_iterations = Some(num(key, value)?),
        "clock" => config.clock = value.parse()?,
        _ => return Err(format!("unknown parameter `{key}`")),
    }
    Ok(())
}

type Params = Vec<(String, String)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    pub label: String,
    pub config: SearchConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub instances: Vec<PathBuf>,
    pub variants: Vec<Variant>,
    pub runs: usize,
    /// Run `i` uses seed `base_seed + i`.
    pub base_seed: u64,
    pub budget: Budget,
    /// Multiplies every time limit, for machines of different speed.
    pub time_scale: f64,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl ExperimentSpec {
    /// Parses `key = value` lines. Relative instance paths resolve against
    /// `base`. Recognized keys:
    ///
    /// ```text
    /// instance = a.dat            (repeatable; `instances` takes a list)
    /// variant = label algorithm [param=value ...]
    /// runs = 25
    /// base_seed = 0
    /// budget = 60 | per-knodes:60
    /// time_scale = 1.0
    /// workers = 1
    /// out_dir = results
    /// <param> = value             (applies to every variant)
    /// ```
    pub fn parse(text: &str, base: &Path) -> Result<ExperimentSpec, SpecError> {
        let mut instances = Vec::new();
        let mut variants: Vec<(String, Algorithm, Params)> = Vec::new();
        let mut globals: Vec<(usize, String, String)> = Vec::new();
        let mut spec = ExperimentSpec {
            instances: Vec::new(),
            variants: Vec::new(),
            runs: 25,
            base_seed: 0,
            budget: Budget::Seconds(60.0),
            time_scale: 1.0,
            out_dir: base.join("results"),
            workers: 1,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| SpecError::Line { line, message };
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (key, value) = text
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let parse_num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("bad number `{v}`")));
            match key {
                "instance" | "instances" => {
                    instances.extend(value.split([',', ' ']).filter(|s| !s.is_empty()).map(|p| base.join(p)))
                }
                "variant" => {
                    let mut words = value.split_whitespace();
                    let label = words.next().ok_or_else(|| err("variant needs a label".into()))?;
                    let algorithm: Algorithm = words
                        .next()
                        .ok_or_else(|| err("variant needs an algorithm".into()))?
                        .parse()
                        .map_err(|e: crate::search::ConfigError| err(e.to_string()))?;
                    let mut params = Vec::new();
                    for w in words {
                        let (k, v) = w.split_once('=').ok_or_else(|| err(format!("expected param=value, got `{w}`")))?;
                        params.push((k.to_string(), v.to_string()));
                    }
                    if variants.iter().any(|v| v.0 == label) {
                        return Err(SpecError::DuplicateVariant(label.to_string()));
                    }
                    variants.push((label.to_string(), algorithm, params));
                }
                "runs" => {
                    spec.runs = value.parse().map_err(|_| err(format!("bad run count `{value}`")))?;
                    if spec.runs == 0 {
                        return Err(err("runs must be at least 1".into()));
                    }
                }
                "base_seed" => spec.base_seed = value.parse().map_err(|_| err(format!("bad seed `{value}`")))?,
                "budget" | "time_limit" => spec.budget = value.parse().map_err(err)?,
                "time_scale" => {
                    spec.time_scale = parse_num(value)?;
                    if !(spec.time_scale > 0.0) {
                        return Err(err("time_scale must be positive".into()));
                    }
                }
                "workers" => spec.workers = value.parse().map_err(|_| err(format!("bad worker count `{value}`")))?,
                "out_dir" => spec.out_dir = base.join(value),
                _ => {
                    // Validate now so the error carries the line number.
                    apply_param(&mut SearchConfig::default(), key, value).map_err(err)?;
                    globals.push((line, key.to_string(), value.to_string()));
                }
            }
        }
        if instances.is_empty() {
            return Err(SpecError::NoInstances);
        }
        if variants.is_empty() {
            return Err(SpecError::NoVariants);
        }
        spec.instances = instances;
        for (label, algorithm, params) in variants {
            let mut config = SearchConfig::with_algorithm(algorithm);
            for (line, k, v) in &globals {
                apply_param(&mut config, k, v).map_err(|message| SpecError::Line { line: *line, message })?;
            }
            for (k, v) in &params {
                apply_param(&mut config, k, v).map_err(|message| SpecError::Line { line: 0, message })?;
            }
            spec.variants.push(Variant { label, config });
        }
        spec.workers = spec.workers.max(1);
        Ok(spec)
    }
}

/// One finished (or failed) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub variant: String,
    pub seed: u64,
    pub final_cost: Option<Cost>,
    /// Clock time at termination (virtual seconds under a virtual clock).
    pub elapsed_seconds: f64,
    pub routes: usize,
    pub trace_path: String,
    pub solution_path: String,
    pub error: Option<String>,
}

fn instance_label(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "instance".into())
}

/// Runs every (instance, variant, run) cell and writes solutions, traces,
/// `runs.csv` and `summary.csv` under the output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut problems = Vec::new();
    for path in &spec.instances {
        let inst = load_instance_file(path).map_err(|source| ExperimentError::Load {
            path: path.clone(),
            source,
        })?;
        problems.push((instance_label(path), Problem::new(inst)));
    }
    fs::create_dir_all(spec.out_dir.join("solutions"))?;
    fs::create_dir_all(spec.out_dir.join("traces"))?;

    let cells: Vec<(usize, usize, u64)> = (0..problems.len())
        .flat_map(|p| (0..spec.variants.len()).flat_map(move |v| (0..spec.runs as u64).map(move |r| (p, v, r))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(spec.workers).build()?;
    let records: Vec<RunRecord> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(p, v, r)| {
                let (label, problem) = &problems[p];
                run_cell(spec, label, problem, &spec.variants[v], spec.base_seed + r)
            })
            .collect()
    });

    write_runs_csv(&records, &spec.out_dir.join("runs.csv"))?;
    write_summary_csv(&summarize(&records), &spec.out_dir.join("summary.csv"))?;
    Ok(records)
}

fn run_cell(spec: &ExperimentSpec, label: &str, problem: &Problem, variant: &Variant, seed: u64) -> RunRecord {
    let stem = format!("{label}__{}__{seed}", variant.label);
    let trace_path = spec.out_dir.join("traces").join(format!("{stem}.csv"));
    let solution_path = spec.out_dir.join("solutions").join(format!("{stem}.sol"));
    let mut record = RunRecord {
        instance: label.to_string(),
        variant: variant.label.clone(),
        seed,
        final_cost: None,
        elapsed_seconds: 0.0,
        routes: 0,
        trace_path: trace_path.display().to_string(),
        solution_path: solution_path.display().to_string(),
        error: None,
    };
    let mut config = variant.config.clone();
    config.seed = seed;
    config.time_limit = spec.budget.seconds_for(&problem.instance) * spec.time_scale;

    let result = (|| -> Result<(), String> {
        let sink = File::create(&trace_path).map_err(|e| e.to_string())?;
        let trace = SearchTrace::with_sink(Box::new(BufWriter::new(sink)));
        let out = solve(problem, &config, trace).map_err(|e| e.to_string())?;
        fs::write(&solution_path, write_solution(&out.solution, &problem.instance)).map_err(|e| e.to_string())?;
        record.final_cost = Some(out.solution.total_cost());
        record.routes = out.solution.routes().len();
        record.elapsed_seconds = out.trace.points.last().map_or(0, |p| p.elapsed_ms) as f64 / 1000.0;
        Ok(())
    })();
    if let Err(e) = result {
        log::error!("{stem}: {e}");
        record.error = Some(e);
    }
    record
}

pub fn write_runs_csv(records: &[RunRecord], path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<RunRecord>, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance: String,
    pub variant: String,
    pub runs: usize,
    pub failures: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for single-run cells.
    pub std: f64,
    pub single_run: bool,
    pub best: Option<Cost>,
    pub worst: Option<Cost>,
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(&str, &str), (Vec<Cost>, usize)> = BTreeMap::new();
    for r in records {
        let cell = cells.entry((r.instance.as_str(), r.variant.as_str())).or_default();
        match r.final_cost {
            Some(c) if r.error.is_none() => cell.0.push(c),
            _ => cell.1 += 1,
        }
    }
    cells
        .into_iter()
        .map(|((instance, variant), (costs, failures))| {
            let n = costs.len();
            let mean = if n == 0 { f64::NAN } else { costs.iter().sum::<Cost>() as f64 / n as f64 };
            let std = if n < 2 {
                0.0
            } else {
                (costs.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            };
            SummaryRow {
                instance: instance.to_string(),
                variant: variant.to_string(),
                runs: n,
                failures,
                mean,
                std,
                single_run: n == 1,
                best: costs.iter().min().copied(),
                worst: costs.iter().max().copied(),
            }
        })
        .collect()
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
