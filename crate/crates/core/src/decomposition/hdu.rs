//! Virtual tasks and hierarchical solution construction.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::kmedoid::farthest_point;
use crate::graph::{Cost, Demand, DistanceTable, Instance, TaskId};
use crate::rco::SubRoutePool;
use crate::solution::{Route, Solution};

/// An ordered run of tasks handled as one unit. Traversable in both directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VirtualTask {
    pub ids: Vec<TaskId>,
    pub demand: Demand,
    /// Service costs plus deadheads between consecutive members; no depot legs.
    pub internal_cost: Cost,
    pub head: usize,
    pub tail: usize,
}

impl VirtualTask {
    pub fn from_ids(ids: Vec<TaskId>, instance: &Instance, dist: &DistanceTable) -> VirtualTask {
        assert!(!ids.is_empty(), "virtual task needs at least one task");
        let demand = ids.iter().map(|&t| instance.demand(t)).sum();
        let internal_cost = ids.iter().map(|&t| instance.service_cost(t)).sum::<Cost>()
            + ids
                .windows(2)
                .map(|w| dist.get(instance.tail(w[0]), instance.head(w[1])))
                .sum::<Cost>();
        VirtualTask {
            head: instance.head(ids[0]),
            tail: instance.tail(ids[ids.len() - 1]),
            ids,
            demand,
            internal_cost,
        }
    }

    pub fn elementary(id: TaskId, instance: &Instance, dist: &DistanceTable) -> VirtualTask {
        VirtualTask::from_ids(vec![id], instance, dist)
    }

    pub fn is_reversible(&self) -> bool {
        true
    }

    /// Reversal keeps the internal cost since deadheading distances are symmetric.
    pub fn reversed(&self) -> VirtualTask {
        VirtualTask {
            ids: self.ids.iter().rev().map(|t| t.inv()).collect(),
            demand: self.demand,
            internal_cost: self.internal_cost,
            head: self.tail,
            tail: self.head,
        }
    }
}

/// One virtual task per sub-route, order and orientation kept.
pub fn build_virtual_tasks(
    pool: &SubRoutePool,
    instance: &Instance,
    dist: &DistanceTable,
) -> Vec<VirtualTask> {
    assert!(!pool.is_empty(), "cannot build virtual tasks from an empty pool");
    pool.subroutes
        .iter()
        .map(|s| VirtualTask::from_ids(s.tasks.clone(), instance, dist))
        .collect()
}

/// Closest approach between two units over the four endpoint pairings.
pub fn endpoint_distance(a: (usize, usize), b: (usize, usize), dist: &DistanceTable) -> Cost {
    let (ah, at) = a;
    let (bh, bt) = b;
    dist.get(ah, bh)
        .min(dist.get(ah, bt))
        .min(dist.get(at, bh))
        .min(dist.get(at, bt))
}

/// A higher-level unit: oriented references to the input units.
#[derive(Clone, Debug)]
struct Chain {
    leaves: Vec<(usize, bool)>,
    head: usize,
    tail: usize,
}

impl Chain {
    fn ends(&self) -> (usize, usize) {
        (self.head, self.tail)
    }

    fn reverse(&mut self) {
        self.leaves.reverse();
        for leaf in &mut self.leaves {
            leaf.1 = !leaf.1;
        }
        std::mem::swap(&mut self.head, &mut self.tail);
    }
}

/// Hierarchical construction: cluster units around far-apart medoids, chain each
/// cluster by randomized nearest neighbour, and repeat on the chains until one
/// remains. The resulting sequence is cut greedily into capacity-feasible routes
/// at unit boundaries.
pub fn hdu<R: Rng + ?Sized>(
    units: &[VirtualTask],
    instance: &Instance,
    dist: &DistanceTable,
    scale: f64,
    rng: &mut R,
) -> Solution {
    assert!(scale > 0.0 && scale < 1.0, "scale must lie in (0, 1)");
    if units.is_empty() {
        return Solution::new(Vec::new());
    }
    let mut level: Vec<Chain> = units
        .iter()
        .enumerate()
        .map(|(i, u)| Chain {
            leaves: vec![(i, false)],
            head: u.head,
            tail: u.tail,
        })
        .collect();

    while level.len() > 1 {
        let m = level.len();
        let k = ((scale * m as f64).ceil() as usize).clamp(1, m - 1);
        let ed = |i: usize, j: usize| endpoint_distance(level[i].ends(), level[j].ends(), dist) as f64;
        let medoids = farthest_point(m, k, ed, rng);

        let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
        for i in 0..m {
            let mut best = f64::INFINITY;
            let mut ties = Vec::new();
            for (c, &med) in medoids.iter().enumerate() {
                let d = ed(i, med);
                if d < best {
                    best = d;
                    ties.clear();
                }
                if d == best {
                    ties.push(c);
                }
            }
            // A medoid always joins its own cluster.
            let c = match medoids.iter().position(|&med| med == i) {
                Some(own) => own,
                None => *ties.choose(rng).expect("at least one medoid"),
            };
            clusters[c].push(i);
        }

        let mut next = Vec::with_capacity(k);
        for members in clusters.into_iter().filter(|c| !c.is_empty()) {
            next.push(chain_cluster(&level, members, dist, rng));
        }
        level = next;
    }

    let top = level.pop().expect("one chain left");
    greedy_split(&top, units, instance, dist)
}

fn chain_cluster<R: Rng + ?Sized>(
    level: &[Chain],
    mut members: Vec<usize>,
    dist: &DistanceTable,
    rng: &mut R,
) -> Chain {
    let start = members.swap_remove(rng.random_range(0..members.len()));
    let mut chain = level[start].clone();
    while !members.is_empty() {
        let mut best = Cost::MAX;
        let mut ties: Vec<(usize, bool)> = Vec::new();
        for (pos, &c) in members.iter().enumerate() {
            for flip in [false, true] {
                let entry = if flip { level[c].tail } else { level[c].head };
                let d = dist.get(chain.tail, entry);
                if d < best {
                    best = d;
                    ties.clear();
                }
                if d == best {
                    ties.push((pos, flip));
                }
            }
        }
        let &(pos, flip) = ties.choose(rng).expect("members non-empty");
        let mut piece = level[members.swap_remove(pos)].clone();
        if flip {
            piece.reverse();
        }
        chain.tail = piece.tail;
        chain.leaves.extend(piece.leaves);
    }
    chain
}

fn greedy_split(top: &Chain, units: &[VirtualTask], instance: &Instance, dist: &DistanceTable) -> Solution {
    let mut routes = Vec::new();
    let mut current: Vec<TaskId> = Vec::new();
    let mut load = 0;
    for &(leaf, reversed) in &top.leaves {
        let unit = &units[leaf];
        if load + unit.demand > instance.capacity && !current.is_empty() {
            routes.push(Route::from_interior(&current, instance, dist));
            current.clear();
            load = 0;
        }
        load += unit.demand;
        if reversed {
            current.extend(unit.ids.iter().rev().map(|t| t.inv()));
        } else {
            current.extend_from_slice(&unit.ids);
        }
    }
    if !current.is_empty() {
        routes.push(Route::from_interior(&current, instance, dist));
    }
    Solution::new(routes)
}
