//! Construction, local search and the decomposition search loops.

pub mod clock;
mod cluster;
mod config;
mod construct;
pub mod local;
mod sahid;
mod trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use clock::{Clock, ClockMode, WORK_PER_VIRTUAL_MS};
pub use cluster::{pop2subpop, rco_cluster_search, rco_cluster_search_with, subpop2pop, LocalSubSolver, SubSolver};
pub use config::{Algorithm, ConfigError, SearchConfig};
pub use construct::path_scanning;
pub use local::{local_search, local_search_within, Neighbors};
pub use sahid::rco_sahid;
pub use trace::{CycleInfo, SearchTrace, TracePoint};

use crate::problem::Problem;
use crate::solution::Solution;

#[derive(Debug)]
pub struct SearchOutcome {
    pub solution: Solution,
    pub trace: SearchTrace,
    /// Move evaluations charged to the run's clock.
    pub work: u64,
}

/// Runs whichever algorithm `config` names.
pub fn solve(problem: &Problem, config: &SearchConfig, trace: SearchTrace) -> Result<SearchOutcome, ConfigError> {
    match config.algorithm {
        Algorithm::SahidRco | Algorithm::SahidRandom => rco_sahid(problem, config, trace),
        Algorithm::ClusterRco | Algorithm::ClusterWholeRoute => rco_cluster_search(problem, config, trace),
        Algorithm::LocalOnly => local_only(problem, config, trace),
    }
}

/// Baseline without decomposition: repeated path scanning plus local search.
pub fn local_only(problem: &Problem, config: &SearchConfig, mut trace: SearchTrace) -> Result<SearchOutcome, ConfigError> {
    config.validate()?;
    if config.algorithm != Algorithm::LocalOnly {
        return Err(ConfigError::WrongAlgorithm(config.algorithm));
    }
    let inst = &problem.instance;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut clock = Clock::new(config.clock, config.time_budget());
    let mut best: Option<Solution> = None;
    let mut stall = 0;
    loop {
        let s = path_scanning(inst, &problem.dist, &mut rng);
        clock.charge(inst.task_count() as u64);
        let s = local_search(s, problem, &mut clock, config.sub_solver_budget, &mut rng);
        if best.as_ref().is_none_or(|b| s.total_cost() < b.total_cost()) {
            trace.improve(clock.elapsed_ms(), s.total_cost());
            best = Some(s);
            stall = 0;
        } else {
            stall += 1;
        }
        trace.iterations += 1;
        if clock.expired()
            || config.max_iterations.is_some_and(|m| trace.iterations >= m)
            || config.stall_limit.is_some_and(|m| stall >= m)
        {
            break;
        }
    }
    trace.finish(clock.elapsed_ms());
    Ok(SearchOutcome {
        solution: best.expect("at least one restart ran"),
        trace,
        work: clock.work(),
    })
}
