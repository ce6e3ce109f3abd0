//! Route cutting off: split the routes of a solution at good and poor links.
//!
//! A link is the connection between two consecutive served tasks of a route.
//! Links whose rank is below the solution-wide average rank are *good*, the
//! rest are *poor*. Each route independently loses one random good link with
//! probability `lambda` and one random poor link with probability `theta`.

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::graph::TaskId;
use crate::rank::RankMatrix;
use crate::solution::{Route, Solution};

#[derive(Debug, Error, PartialEq)]
#[error("cut probability {name} = {value} is outside [0, 1]")]
pub struct ParamError {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RcoParams {
    lambda: f64,
    theta: f64,
}

impl RcoParams {
    pub fn new(lambda: f64, theta: f64) -> Result<RcoParams, ParamError> {
        for (name, value) in [("lambda", lambda), ("theta", theta)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ParamError { name, value });
            }
        }
        Ok(RcoParams { lambda, theta })
    }

    /// Probability of cutting a good link in a route.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Probability of cutting a poor link in a route.
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl Default for RcoParams {
    fn default() -> Self {
        RcoParams {
            lambda: 0.05,
            theta: 0.2,
        }
    }
}

/// A contiguous, orientation-preserving slice of a route interior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubRoute {
    pub tasks: Vec<TaskId>,
    /// Index of the originating route in the split solution.
    pub origin: usize,
    /// Position of `tasks[0]` within the originating route's interior.
    pub offset: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubRoutePool {
    pub subroutes: Vec<SubRoute>,
    /// Link positions cut in each route of the split solution, ascending.
    /// Position `i` separates interior elements `i` and `i + 1`.
    pub cuts: Vec<Vec<usize>>,
}

impl SubRoutePool {
    pub fn len(&self) -> usize {
        self.subroutes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subroutes.is_empty()
    }

    pub fn task_count(&self) -> usize {
        self.subroutes.iter().map(|s| s.tasks.len()).sum()
    }

    fn push_route(&mut self, origin: usize, interior: &[TaskId], mut cuts: Vec<usize>) {
        cuts.sort_unstable();
        cuts.dedup();
        let mut start = 0;
        for &c in cuts.iter().chain(std::iter::once(&(interior.len() - 1))) {
            self.subroutes.push(SubRoute {
                tasks: interior[start..=c].to_vec(),
                origin,
                offset: start,
            });
            start = c + 1;
        }
        self.cuts.push(cuts);
    }
}

#[inline]
fn link_rank(ranks: &RankMatrix, from: TaskId, to: TaskId) -> u32 {
    ranks.rank(from.task_index(), to.task_index())
}

/// Mean rank over all task-to-task links of the solution. Depot connections
/// are not links. Zero when no route serves two or more tasks.
pub fn average_task_rank(solution: &Solution, ranks: &RankMatrix) -> f64 {
    let (sum, count) = solution
        .routes()
        .iter()
        .flat_map(|r| r.interior().windows(2))
        .fold((0u64, 0u64), |(s, c), w| (s + link_rank(ranks, w[0], w[1]) as u64, c + 1));
    if count == 0 {
        0.0
    } else {
        sum as f64 / count as f64
    }
}

/// Link positions of a route partitioned by rank against `avg`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinkClasses {
    pub good: Vec<usize>,
    pub poor: Vec<usize>,
}

pub fn classify_links(route: &Route, ranks: &RankMatrix, avg: f64) -> LinkClasses {
    classify_interior(route.interior(), ranks, avg)
}

fn classify_interior(interior: &[TaskId], ranks: &RankMatrix, avg: f64) -> LinkClasses {
    let mut classes = LinkClasses::default();
    for (i, w) in interior.windows(2).enumerate() {
        if (link_rank(ranks, w[0], w[1]) as f64) < avg {
            classes.good.push(i);
        } else {
            classes.poor.push(i);
        }
    }
    classes
}

/// Splits every route at (at most) one good and one poor link.
pub fn rco_split<R: Rng + ?Sized>(
    solution: &Solution,
    ranks: &RankMatrix,
    params: RcoParams,
    rng: &mut R,
) -> SubRoutePool {
    let avg = average_task_rank(solution, ranks);
    let mut pool = SubRoutePool::default();
    for (k, route) in solution.routes().iter().enumerate() {
        let interior = route.interior();
        if interior.is_empty() {
            pool.cuts.push(Vec::new());
            continue;
        }
        let classes = classify_interior(interior, ranks, avg);
        let mut cuts = Vec::with_capacity(2);
        if rng.random::<f64>() < params.lambda {
            cuts.extend(classes.good.choose(rng));
        }
        if rng.random::<f64>() < params.theta {
            cuts.extend(classes.poor.choose(rng));
        }
        pool.push_route(k, interior, cuts);
    }
    pool
}

/// Cuts every route with two or more tasks at one uniformly chosen link.
pub fn random_split<R: Rng + ?Sized>(solution: &Solution, rng: &mut R) -> SubRoutePool {
    let mut pool = SubRoutePool::default();
    for (k, route) in solution.routes().iter().enumerate() {
        let interior = route.interior();
        if interior.is_empty() {
            pool.cuts.push(Vec::new());
            continue;
        }
        let cuts = if interior.len() >= 2 {
            vec![rng.random_range(0..interior.len() - 1)]
        } else {
            Vec::new()
        };
        pool.push_route(k, interior, cuts);
    }
    pool
}

/// Every non-empty route interior as one sub-route.
pub fn whole_routes(solution: &Solution) -> SubRoutePool {
    let mut pool = SubRoutePool::default();
    for (k, route) in solution.routes().iter().enumerate() {
        if route.is_empty() {
            pool.cuts.push(Vec::new());
        } else {
            pool.push_route(k, route.interior(), Vec::new());
        }
    }
    pool
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{shortest_paths, Cost, Edge, Instance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Path 0-1-2-3-4 with unit tasks; ranks follow path distance.
    fn path_problem(tasks: usize) -> (Instance, RankMatrix, crate::graph::DistanceTable) {
        let edges = (0..tasks)
            .map(|i| Edge {
                u: i,
                v: i + 1,
                demand: 1,
                service_cost: 1,
                deadheading_cost: 1,
            })
            .collect();
        let inst = Instance::new("path", tasks + 1, edges, 0, 100).unwrap();
        let d = shortest_paths(&inst);
        let n = inst.task_count();
        let nums: Vec<Cost> = (0..n * n)
            .map(|i| crate::rank::link_cost_numerator(i / n, i % n, &inst, &d))
            .collect();
        (inst, RankMatrix::from_link_numerators(n, nums), d)
    }

    #[test]
    fn params_validated() {
        assert!(RcoParams::new(0.0, 1.0).is_ok());
        assert_eq!(
            RcoParams::new(1.5, 0.2).unwrap_err(),
            ParamError {
                name: "lambda",
                value: 1.5
            }
        );
        assert!(RcoParams::new(0.1, -0.1).is_err());
    }

    #[test]
    fn no_cuts_gives_whole_routes() {
        let (inst, ranks, d) = path_problem(5);
        let ids: Vec<TaskId> = inst.forward_ids().collect();
        let sol = Solution::from_interiors([ids[..3].to_vec(), ids[3..].to_vec()], &inst, &d);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pool = rco_split(&sol, &ranks, RcoParams::new(0.0, 0.0).unwrap(), &mut rng);
        assert_eq!(pool, whole_routes(&sol));
        assert_eq!(pool.len(), 2);
    }

    #[test]
    fn single_cut_slices_route() {
        let (inst, _, _) = path_problem(3);
        let ids: Vec<TaskId> = inst.forward_ids().collect();
        let mut pool = SubRoutePool::default();
        pool.push_route(0, &ids, vec![0]);
        let parts: Vec<_> = pool.subroutes.iter().map(|s| s.tasks.clone()).collect();
        assert_eq!(parts, vec![vec![ids[0]], vec![ids[1], ids[2]]]);
        assert_eq!(pool.subroutes[1].offset, 1);
    }

    #[test]
    fn both_cuts_on_four_task_route_give_three_pieces() {
        // Zig-zag order so the route has both good and poor links.
        let (inst, ranks, d) = path_problem(6);
        let f: Vec<TaskId> = inst.forward_ids().collect();
        let interior = vec![f[0], f[1], f[5], f[4]];
        let sol = Solution::from_interiors([interior], &inst, &d);
        let avg = average_task_rank(&sol, &ranks);
        let classes = classify_links(&sol.routes()[0], &ranks, avg);
        assert!(!classes.good.is_empty() && !classes.poor.is_empty());
        let params = RcoParams::new(1.0, 1.0).unwrap();
        for seed in 0..20 {
            let pool = rco_split(&sol, &ranks, params, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(pool.len(), 3);
            assert_eq!(pool.cuts[0].len(), 2);
        }
    }

    #[test]
    fn singleton_routes_have_no_links() {
        let (inst, ranks, d) = path_problem(3);
        let sol = Solution::from_interiors(inst.forward_ids().map(|t| vec![t]), &inst, &d);
        assert_eq!(average_task_rank(&sol, &ranks), 0.0);
        let classes = classify_links(&sol.routes()[0], &ranks, 0.0);
        assert!(classes.good.is_empty() && classes.poor.is_empty());
    }

    #[test]
    fn single_link_average_is_its_rank() {
        let (inst, ranks, d) = path_problem(4);
        let f: Vec<TaskId> = inst.forward_ids().collect();
        let sol = Solution::from_interiors([vec![f[0], f[3]], vec![f[1]], vec![f[2]]], &inst, &d);
        assert_eq!(average_task_rank(&sol, &ranks), ranks.rank(0, 3) as f64);
        // Equal to the average is poor.
        let classes = classify_links(&sol.routes()[0], &ranks, ranks.rank(0, 3) as f64);
        assert_eq!(classes.poor, vec![0]);
    }

    #[test]
    fn random_split_cuts_multi_task_routes_once() {
        let (inst, _, d) = path_problem(5);
        let f: Vec<TaskId> = inst.forward_ids().collect();
        let sol = Solution::from_interiors([f[..4].to_vec(), vec![f[4]]], &inst, &d);
        let pool = random_split(&sol, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(pool.len(), 3);
        assert_eq!(pool.cuts[0].len(), 1);
        assert!(pool.cuts[1].is_empty());
    }
}
