//! Routes, solutions, the total-cost objective and feasibility checking.

use std::fmt;

use crate::graph::{Cost, Demand, DistanceTable, Instance, TaskId};

/// Cost of a full ID sequence (depot sentinels included): service cost of every
/// element plus the deadhead from each element's tail to the next element's head.
pub fn route_cost(ids: &[TaskId], instance: &Instance, dist: &DistanceTable) -> Cost {
    ids.windows(2)
        .map(|w| instance.service_cost(w[0]) + dist.get(instance.tail(w[0]), instance.head(w[1])))
        .sum()
}

/// Cost of a bare interior (no sentinels) as if it were wrapped by depot loops.
pub fn interior_cost(interior: &[TaskId], instance: &Instance, dist: &DistanceTable) -> Cost {
    let Some((first, last)) = interior.first().zip(interior.last()) else {
        return 0;
    };
    let depot = instance.depot;
    let mut cost = dist.get(depot, instance.head(*first)) + dist.get(instance.tail(*last), depot);
    for w in interior.windows(2) {
        cost += dist.get(instance.tail(w[0]), instance.head(w[1]));
    }
    cost + interior.iter().map(|&t| instance.service_cost(t)).sum::<Cost>()
}

/// A vehicle route: `t0, ..., t0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    ids: Vec<TaskId>,
    load: Demand,
    cost: Cost,
}

impl Route {
    pub fn from_interior(interior: &[TaskId], instance: &Instance, dist: &DistanceTable) -> Route {
        let mut ids = Vec::with_capacity(interior.len() + 2);
        ids.push(TaskId::DEPOT);
        ids.extend_from_slice(interior);
        ids.push(TaskId::DEPOT);
        Route::from_ids(ids, instance, dist)
    }

    /// Takes a full sequence; every ID must be known to `instance`.
    pub fn from_ids(ids: Vec<TaskId>, instance: &Instance, dist: &DistanceTable) -> Route {
        let load = ids.iter().map(|&t| instance.demand(t)).sum();
        let cost = route_cost(&ids, instance, dist);
        Route { ids, load, cost }
    }

    /// Wraps a sequence without evaluating it. Load and cost are left at zero;
    /// intended for feeding arbitrary data to [`validate`].
    pub fn raw(ids: Vec<TaskId>) -> Route {
        Route {
            ids,
            load: 0,
            cost: 0,
        }
    }

    pub fn empty() -> Route {
        Route::raw(vec![TaskId::DEPOT, TaskId::DEPOT])
    }

    pub fn ids(&self) -> &[TaskId] {
        &self.ids
    }

    /// The served task IDs, sentinels stripped.
    pub fn interior(&self) -> &[TaskId] {
        if self.ids.len() < 2 {
            return &[];
        }
        &self.ids[1..self.ids.len() - 1]
    }

    pub fn task_count(&self) -> usize {
        self.ids.len().saturating_sub(2)
    }

    pub fn is_empty(&self) -> bool {
        self.task_count() == 0
    }

    pub fn load(&self) -> Demand {
        self.load
    }

    pub fn cost(&self) -> Cost {
        self.cost
    }

    /// Same route driven backwards: order reversed and each ID replaced by its inverse.
    pub fn reversed(&self, instance: &Instance, dist: &DistanceTable) -> Route {
        let ids = self.ids.iter().rev().map(|t| t.inv()).collect();
        Route::from_ids(ids, instance, dist)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    routes: Vec<Route>,
    total_cost: Cost,
}

impl Solution {
    pub fn new(routes: Vec<Route>) -> Solution {
        let total_cost = routes.iter().map(Route::cost).sum();
        Solution { routes, total_cost }
    }

    pub fn from_interiors<I, R>(interiors: I, instance: &Instance, dist: &DistanceTable) -> Solution
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[TaskId]>,
    {
        Solution::new(
            interiors
                .into_iter()
                .map(|r| Route::from_interior(r.as_ref(), instance, dist))
                .collect(),
        )
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn into_routes(self) -> Vec<Route> {
        self.routes
    }

    pub fn total_cost(&self) -> Cost {
        self.total_cost
    }

    pub fn task_count(&self) -> usize {
        self.routes.iter().map(Route::task_count).sum()
    }

    pub fn interiors(&self) -> Vec<Vec<TaskId>> {
        self.routes.iter().map(|r| r.interior().to_vec()).collect()
    }

    /// Drops routes that serve nothing.
    pub fn strip_empty(mut self) -> Solution {
        self.routes.retain(|r| !r.is_empty());
        self
    }

    /// Recomputes every cached value from scratch and reports whether the
    /// caches agreed.
    pub fn caches_consistent(&self, instance: &Instance, dist: &DistanceTable) -> bool {
        let mut total = 0;
        for r in &self.routes {
            let fresh = Route::from_ids(r.ids.clone(), instance, dist);
            if fresh.cost != r.cost || fresh.load != r.load {
                return false;
            }
            total += fresh.cost;
        }
        total == self.total_cost
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MalformedSentinels { route: usize },
    UnknownTaskId { route: usize, id: TaskId },
    DuplicateTask { route: usize, task: usize },
    MissingTask { task: usize },
    CapacityExceeded { route: usize, load: Demand, capacity: Demand },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MalformedSentinels { route } => {
                write!(f, "route {route}: must start and end at the depot and not visit it in between")
            }
            Violation::UnknownTaskId { route, id } => write!(f, "route {route}: unknown task id {id}"),
            Violation::DuplicateTask { route, task } => {
                write!(f, "route {route}: task {task} is served more than once")
            }
            Violation::MissingTask { task } => write!(f, "task {task} is never served"),
            Violation::CapacityExceeded {
                route,
                load,
                capacity,
            } => write!(f, "route {route}: load {load} exceeds capacity {capacity}"),
        }
    }
}

/// Violations found by [`validate`]. Empty means feasible.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a solution against every constraint of the formulation.
pub fn validate(solution: &Solution, instance: &Instance) -> ValidityReport {
    validate_for_tasks(solution, instance, 0..instance.task_count())
}

/// Like [`validate`], but only the given task indices must be served; serving
/// any other task counts as an unknown ID.
pub fn validate_for_tasks(
    solution: &Solution,
    instance: &Instance,
    required: impl IntoIterator<Item = usize>,
) -> ValidityReport {
    let mut expected = vec![false; instance.task_count()];
    for t in required {
        expected[t] = true;
    }
    let mut seen = vec![false; instance.task_count()];
    let mut violations = Vec::new();

    for (k, route) in solution.routes().iter().enumerate() {
        let ids = route.ids();
        let sentinels_ok = ids.len() >= 2 && ids[0].is_depot() && ids[ids.len() - 1].is_depot();
        if !sentinels_ok || route.interior().iter().any(|t| t.is_depot()) {
            violations.push(Violation::MalformedSentinels { route: k });
        }
        let mut load = 0;
        for &id in ids.iter().filter(|t| !t.is_depot()) {
            if id.0 as usize >= instance.id_count() || !expected[id.task_index()] {
                violations.push(Violation::UnknownTaskId { route: k, id });
                continue;
            }
            let task = id.task_index();
            if seen[task] {
                violations.push(Violation::DuplicateTask { route: k, task });
            }
            seen[task] = true;
            load += instance.demand(id);
        }
        if load > instance.capacity {
            violations.push(Violation::CapacityExceeded {
                route: k,
                load,
                capacity: instance.capacity,
            });
        }
    }

    for (task, (&want, &got)) in expected.iter().zip(&seen).enumerate() {
        if want && !got {
            violations.push(Violation::MissingTask { task });
        }
    }
    ValidityReport { violations }
}

/// Capacity lower bound on the number of vehicles: `ceil(total demand / Q)`.
pub fn min_vehicles(instance: &Instance) -> usize {
    let total = instance.total_demand();
    ((total + instance.capacity - 1) / instance.capacity).max(1) as usize
}
