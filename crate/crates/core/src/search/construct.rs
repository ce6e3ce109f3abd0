use rand::seq::IndexedRandom;
use rand::Rng;

use crate::graph::{Cost, DistanceTable, Instance, TaskId};
use crate::solution::{Route, Solution};

/// Path scanning: from the end of the open route, serve the nearest unserved
/// task that still fits, in whichever direction is closer. A route closes when
/// nothing fits.
pub fn path_scanning<R: Rng + ?Sized>(instance: &Instance, dist: &DistanceTable, rng: &mut R) -> Solution {
    let mut served = vec![false; instance.task_count()];
    let mut left = instance.task_count();
    let mut routes = Vec::new();
    let mut ties: Vec<TaskId> = Vec::new();
    while left > 0 {
        let mut interior = Vec::new();
        let mut load = 0;
        let mut at = instance.depot;
        loop {
            let mut best = Cost::MAX;
            ties.clear();
            for t in (0..instance.task_count()).filter(|&t| !served[t]) {
                if load + instance.tasks[t].demand > instance.capacity {
                    continue;
                }
                for id in [TaskId::forward(t), TaskId::reverse(t)] {
                    let d = dist.get(at, instance.head(id));
                    if d < best {
                        best = d;
                        ties.clear();
                    }
                    if d == best {
                        ties.push(id);
                    }
                }
            }
            let Some(&id) = ties.choose(rng) else { break };
            served[id.task_index()] = true;
            left -= 1;
            load += instance.demand(id);
            at = instance.tail(id);
            interior.push(id);
        }
        debug_assert!(!interior.is_empty(), "every task fits an empty vehicle");
        routes.push(Route::from_interior(&interior, instance, dist));
    }
    Solution::new(routes)
}
