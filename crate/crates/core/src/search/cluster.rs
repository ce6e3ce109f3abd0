//! Sub-route clustering search: group the sub-routes of the best solution,
//! solve each group's tasks as an independent sub-problem against projections
//! of the whole solution pool, and stitch the group results back together.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::clock::Clock;
use super::config::{Algorithm, ConfigError, SearchConfig};
use super::construct::path_scanning;
use super::local::{local_search, local_search_within, Neighbors, NEIGHBOUR_COUNT};
use super::trace::{CycleInfo, SearchTrace};
use super::SearchOutcome;
use crate::decomposition::{build_virtual_tasks, fuzzy_kmedoid, group_tasks, hdu};
use crate::graph::{Instance, TaskId};
use crate::problem::Problem;
use crate::rco::{random_split, rco_split, whole_routes};
use crate::solution::{Route, Solution};

/// Solves one group's sub-problem given the projected pool, returning improved
/// solutions over the same tasks, best first.
pub trait SubSolver: Sync {
    fn solve(
        &self,
        subpop: Vec<Solution>,
        problem: &Problem,
        neighbors: &Neighbors,
        clock: &mut Clock,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Solution>;
}

/// Local search on every member plus one perturbed copy of the best (random
/// cut, hierarchical rebuild, local search). Keeps the pool size.
#[derive(Clone, Copy, Debug)]
pub struct LocalSubSolver {
    pub budget: Option<u64>,
    pub scale: f64,
}

impl SubSolver for LocalSubSolver {
    fn solve(
        &self,
        subpop: Vec<Solution>,
        problem: &Problem,
        neighbors: &Neighbors,
        clock: &mut Clock,
        rng: &mut ChaCha8Rng,
    ) -> Vec<Solution> {
        let size = subpop.len();
        let mut out: Vec<Solution> = Vec::with_capacity(size + 1);
        for s in subpop {
            out.push(local_search_within(s, problem, neighbors, clock, self.budget, rng));
        }
        sort_pool(&mut out);
        if let Some(best) = out.first() {
            let (inst, dist) = (&problem.instance, &*problem.dist);
            let pool = random_split(best, rng);
            if !pool.is_empty() {
                let units = build_virtual_tasks(&pool, inst, dist);
                let rebuilt = hdu(&units, inst, dist, self.scale, rng);
                clock.charge(units.len() as u64);
                out.push(local_search_within(rebuilt, problem, neighbors, clock, self.budget, rng));
            }
        }
        sort_pool(&mut out);
        out.dedup_by(|a, b| a.interiors() == b.interiors());
        out.truncate(size);
        out
    }
}

fn sort_pool(pool: &mut [Solution]) {
    pool.sort_by_key(|s| s.total_cost());
}

/// Restricts a solution to the tasks flagged in `keep`; routes left empty are
/// dropped. Loads only shrink, so feasibility carries over.
pub fn pop2subpop(solution: &Solution, keep: &[bool], instance: &Instance, dist: &crate::graph::DistanceTable) -> Solution {
    let interiors = solution.routes().iter().filter_map(|r| {
        let kept: Vec<TaskId> = r.interior().iter().copied().filter(|t| keep[t.task_index()]).collect();
        (!kept.is_empty()).then_some(kept)
    });
    Solution::from_interiors(interiors, instance, dist)
}

/// Joins the `j`-th solution of every group into full solutions.
pub fn subpop2pop(subpops: &[Vec<Solution>]) -> Vec<Solution> {
    let size = subpops.iter().map(Vec::len).max().unwrap_or(0);
    (0..size)
        .map(|j| {
            let routes: Vec<Route> = subpops
                .iter()
                .flat_map(|sp| sp[j.min(sp.len() - 1)].routes().iter().cloned())
                .collect();
            Solution::new(routes)
        })
        .collect()
}

pub fn rco_cluster_search(
    problem: &Problem,
    config: &SearchConfig,
    trace: SearchTrace,
) -> Result<SearchOutcome, ConfigError> {
    let solver = LocalSubSolver {
        budget: config.sub_solver_budget,
        scale: config.scale,
    };
    rco_cluster_search_with(problem, config, &solver, trace)
}

pub fn rco_cluster_search_with(
    problem: &Problem,
    config: &SearchConfig,
    solver: &dyn SubSolver,
    mut trace: SearchTrace,
) -> Result<SearchOutcome, ConfigError> {
    config.validate()?;
    if !matches!(config.algorithm, Algorithm::ClusterRco | Algorithm::ClusterWholeRoute) {
        return Err(ConfigError::WrongAlgorithm(config.algorithm));
    }
    let inst = &problem.instance;
    let dist = &*problem.dist;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut clock = Clock::new(config.clock, config.time_budget());

    let mut pool: Vec<Solution> = Vec::with_capacity(config.pool_size);
    for _ in 0..config.pool_size {
        let s = path_scanning(inst, dist, &mut rng);
        clock.charge(inst.task_count() as u64);
        pool.push(local_search(s, problem, &mut clock, config.sub_solver_budget, &mut rng));
        if clock.expired() {
            break;
        }
    }
    sort_pool(&mut pool);
    let mut best = pool[0].clone();
    trace.improve(clock.elapsed_ms(), best.total_cost());

    let mut stall: u64 = 0;
    for cycle in 0..config.max_cycles {
        if clock.expired()
            || inst.task_count() == 0
            || config.max_iterations.is_some_and(|m| cycle >= m)
            || config.stall_limit.is_some_and(|m| stall >= m)
        {
            break;
        }
        let split = match config.algorithm {
            Algorithm::ClusterRco => rco_split(&best, &problem.ranks, config.rco, &mut rng),
            _ => whole_routes(&best),
        };
        let groups = fuzzy_kmedoid(&split, config.cluster, &problem.ranks, &mut rng);
        let task_sets = group_tasks(&split, &groups);
        let cycle_seed: u64 = rng.random();

        let results: Vec<(Vec<Solution>, Clock)> = task_sets
            .par_iter()
            .enumerate()
            .map(|(gi, ids)| {
                let mut grng = ChaCha8Rng::seed_from_u64(cycle_seed);
                grng.set_stream(gi as u64);
                let mut gclock = clock.fork();
                let mut keep = vec![false; inst.task_count()];
                let tasks: Vec<usize> = ids.iter().map(|t| t.task_index()).collect();
                for &t in &tasks {
                    keep[t] = true;
                }
                let neighbors = Neighbors::restricted(&problem.ranks, &tasks, NEIGHBOUR_COUNT);
                let subpop: Vec<Solution> = pool.iter().map(|s| pop2subpop(s, &keep, inst, dist)).collect();
                let solved = solver.solve(subpop, problem, &neighbors, &mut gclock, &mut grng);
                (solved, gclock)
            })
            .collect();
        clock.absorb(results.iter().map(|(_, c)| c));
        let subpops: Vec<Vec<Solution>> = results.into_iter().map(|(s, _)| s).collect();

        pool = subpop2pop(&subpops);
        sort_pool(&mut pool);
        let candidate = pool[0].total_cost();
        let improved = candidate < best.total_cost();
        trace.iterations += 1;
        trace.cycles.push(CycleInfo {
            index: cycle,
            elapsed_ms: clock.elapsed_ms(),
            subroutes: split.len(),
            groups: groups.len(),
            candidate_cost: candidate,
            accepted: improved,
        });
        if improved {
            best = pool[0].clone();
            trace.improve(clock.elapsed_ms(), best.total_cost());
            stall = 0;
        } else {
            stall += 1;
        }
    }
    if trace.iterations == 0 {
        log::warn!("time limit too short for a single cycle; returning the initial solution");
    }
    trace.finish(clock.elapsed_ms());
    Ok(SearchOutcome {
        solution: best,
        trace,
        work: clock.work(),
    })
}
