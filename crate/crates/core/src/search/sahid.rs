use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::clock::Clock;
use super::config::{Algorithm, ConfigError, SearchConfig};
use super::local::local_search;
use super::trace::{CycleInfo, SearchTrace};
use super::SearchOutcome;
use crate::decomposition::{build_virtual_tasks, hdu, VirtualTask};
use crate::problem::Problem;
use crate::rco::{random_split, rco_split};

/// Hierarchical decomposition search: split the current solution into
/// sub-routes, rebuild a solution from them as virtual tasks, improve it, and
/// decide whether to move there.
pub fn rco_sahid(problem: &Problem, config: &SearchConfig, mut trace: SearchTrace) -> Result<SearchOutcome, ConfigError> {
    config.validate()?;
    if !matches!(config.algorithm, Algorithm::SahidRco | Algorithm::SahidRandom) {
        return Err(ConfigError::WrongAlgorithm(config.algorithm));
    }
    let inst = &problem.instance;
    let dist = &*problem.dist;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut clock = Clock::new(config.clock, config.time_budget());

    let units: Vec<VirtualTask> = inst.forward_ids().map(|t| VirtualTask::elementary(t, inst, dist)).collect();
    let start = hdu(&units, inst, dist, config.scale, &mut rng);
    clock.charge(units.len() as u64);
    let mut current = local_search(start, problem, &mut clock, config.sub_solver_budget, &mut rng);
    let mut best = current.clone();
    trace.improve(clock.elapsed_ms(), best.total_cost());

    let mut idle: u64 = 0;
    let mut stall: u64 = 0;
    while !clock.expired()
        && !config.max_iterations.is_some_and(|m| trace.iterations >= m)
        && !config.stall_limit.is_some_and(|m| stall >= m)
        && inst.task_count() > 0
    {
        let pool = match config.algorithm {
            Algorithm::SahidRco => rco_split(&current, &problem.ranks, config.rco, &mut rng),
            _ => random_split(&current, &mut rng),
        };
        let vts = build_virtual_tasks(&pool, inst, dist);
        let rebuilt = hdu(&vts, inst, dist, config.scale, &mut rng);
        clock.charge(vts.len() as u64);
        let candidate = local_search(rebuilt, problem, &mut clock, config.sub_solver_budget, &mut rng);
        trace.iterations += 1;
        idle += 1;

        let (cand, cur) = (candidate.total_cost(), current.total_cost());
        let accepted = if cand < cur {
            true
        } else if idle > config.idle_limit && cand as f64 <= config.accept_threshold * cur as f64 {
            trace.accepted_worse += 1;
            idle = 0;
            true
        } else {
            false
        };
        trace.cycles.push(CycleInfo {
            index: trace.iterations,
            elapsed_ms: clock.elapsed_ms(),
            subroutes: pool.len(),
            groups: 0,
            candidate_cost: cand,
            accepted,
        });
        if accepted {
            current = candidate;
        }
        if current.total_cost() < best.total_cost() {
            best = current.clone();
            trace.improve(clock.elapsed_ms(), best.total_cost());
            idle = 0;
            stall = 0;
        } else {
            stall += 1;
        }
    }
    if trace.iterations == 0 {
        log::warn!("time limit too short for a single iteration; returning the initial solution");
    }
    trace.finish(clock.elapsed_ms());
    Ok(SearchOutcome {
        solution: best,
        trace,
        work: clock.work(),
    })
}
