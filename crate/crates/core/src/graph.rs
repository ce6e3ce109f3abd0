//! Problem instance, task representation and the all-pairs deadheading table.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

/// Costs and demands are integral in every benchmark set we target.
pub type Cost = i64;
pub type Demand = i64;

/// Distance recorded between vertices that cannot reach each other. Small enough
/// that summing four of them cannot overflow.
pub const UNREACHABLE: Cost = i64::MAX / 16;

/// Directed task identifier. `0` is the depot loop; task `i` is served as
/// `2i + 1` (forward, `u -> v`) or `2i + 2` (reverse, `v -> u`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TaskId(pub u32);

impl TaskId {
    pub const DEPOT: TaskId = TaskId(0);

    #[inline]
    pub fn forward(task_index: usize) -> TaskId {
        TaskId(2 * task_index as u32 + 1)
    }

    #[inline]
    pub fn reverse(task_index: usize) -> TaskId {
        TaskId(2 * task_index as u32 + 2)
    }

    #[inline]
    pub fn is_depot(self) -> bool {
        self.0 == 0
    }

    /// Index of the underlying undirected task. Must not be called on the depot.
    #[inline]
    pub fn task_index(self) -> usize {
        debug_assert!(!self.is_depot());
        (self.0 as usize - 1) / 2
    }

    #[inline]
    pub fn is_forward(self) -> bool {
        self.0 % 2 == 1
    }

    #[inline]
    pub fn inv(self) -> TaskId {
        match self.0 {
            0 => self,
            x if x % 2 == 1 => TaskId(x + 1),
            x => TaskId(x - 1),
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub demand: Demand,
    pub service_cost: Cost,
    pub deadheading_cost: Cost,
}

impl Edge {
    pub fn is_required(&self) -> bool {
        self.demand > 0
    }
}

/// An edge with positive demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    /// Position of the underlying edge in [`Instance::edges`].
    pub edge: usize,
    pub u: usize,
    pub v: usize,
    pub demand: Demand,
    pub service_cost: Cost,
    pub deadheading_cost: Cost,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("instance has no vertices")]
    NoVertices,
    #[error("depot {depot} is not a vertex (|V| = {vertex_count})")]
    BadDepot { depot: usize, vertex_count: usize },
    #[error("edge {edge} references vertex {vertex}, but |V| = {vertex_count}")]
    DanglingVertex {
        edge: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("capacity must be positive, got {0}")]
    BadCapacity(Demand),
    #[error("edge {edge} has a negative attribute")]
    NegativeAttribute { edge: usize },
    #[error("task on edge {edge} has demand {demand} exceeding capacity {capacity}")]
    DemandExceedsCapacity {
        edge: usize,
        demand: Demand,
        capacity: Demand,
    },
    #[error("vertex {vertex} of task on edge {edge} is unreachable from the depot")]
    UnreachableTask { edge: usize, vertex: usize },
}

/// A validated CARP instance. Vertices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub vertex_count: usize,
    pub edges: Vec<Edge>,
    pub depot: usize,
    pub capacity: Demand,
    pub tasks: Vec<Task>,
    // Per-ID lookup tables, indexed by `TaskId.0`.
    head: Vec<usize>,
    tail: Vec<usize>,
    id_demand: Vec<Demand>,
    id_service: Vec<Cost>,
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        vertex_count: usize,
        edges: Vec<Edge>,
        depot: usize,
        capacity: Demand,
    ) -> Result<Instance, InstanceError> {
        if vertex_count == 0 {
            return Err(InstanceError::NoVertices);
        }
        if depot >= vertex_count {
            return Err(InstanceError::BadDepot {
                depot,
                vertex_count,
            });
        }
        if capacity <= 0 {
            return Err(InstanceError::BadCapacity(capacity));
        }
        for (i, e) in edges.iter().enumerate() {
            for vertex in [e.u, e.v] {
                if vertex >= vertex_count {
                    return Err(InstanceError::DanglingVertex {
                        edge: i,
                        vertex,
                        vertex_count,
                    });
                }
            }
            if e.demand < 0 || e.service_cost < 0 || e.deadheading_cost < 0 {
                return Err(InstanceError::NegativeAttribute { edge: i });
            }
            if e.demand > capacity {
                return Err(InstanceError::DemandExceedsCapacity {
                    edge: i,
                    demand: e.demand,
                    capacity,
                });
            }
        }

        let tasks: Vec<Task> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_required())
            .map(|(i, e)| Task {
                edge: i,
                u: e.u,
                v: e.v,
                demand: e.demand,
                service_cost: e.service_cost,
                deadheading_cost: e.deadheading_cost,
            })
            .collect();

        let reachable = reachable_from(vertex_count, &edges, depot);
        for t in &tasks {
            for vertex in [t.u, t.v] {
                if !reachable[vertex] {
                    return Err(InstanceError::UnreachableTask {
                        edge: t.edge,
                        vertex,
                    });
                }
            }
        }

        let ids = 2 * tasks.len() + 1;
        let mut head = vec![depot; ids];
        let mut tail = vec![depot; ids];
        let mut id_demand = vec![0; ids];
        let mut id_service = vec![0; ids];
        for (i, t) in tasks.iter().enumerate() {
            let (f, r) = (TaskId::forward(i).0 as usize, TaskId::reverse(i).0 as usize);
            head[f] = t.u;
            tail[f] = t.v;
            head[r] = t.v;
            tail[r] = t.u;
            id_demand[f] = t.demand;
            id_demand[r] = t.demand;
            id_service[f] = t.service_cost;
            id_service[r] = t.service_cost;
        }

        Ok(Instance {
            name: name.into(),
            vertex_count,
            edges,
            depot,
            capacity,
            tasks,
            head,
            tail,
            id_demand,
            id_service,
        })
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    /// Number of valid IDs including the depot loop.
    pub fn id_count(&self) -> usize {
        self.head.len()
    }

    #[inline]
    pub fn head(&self, id: TaskId) -> usize {
        self.head[id.0 as usize]
    }

    #[inline]
    pub fn tail(&self, id: TaskId) -> usize {
        self.tail[id.0 as usize]
    }

    #[inline]
    pub fn demand(&self, id: TaskId) -> Demand {
        self.id_demand[id.0 as usize]
    }

    #[inline]
    pub fn service_cost(&self, id: TaskId) -> Cost {
        self.id_service[id.0 as usize]
    }

    pub fn total_demand(&self) -> Demand {
        self.tasks.iter().map(|t| t.demand).sum()
    }

    pub fn total_service_cost(&self) -> Cost {
        self.tasks.iter().map(|t| t.service_cost).sum()
    }

    /// All task IDs in the forward orientation, in task order.
    pub fn forward_ids(&self) -> impl Iterator<Item = TaskId> + '_ {
        (0..self.tasks.len()).map(TaskId::forward)
    }
}

fn adjacency(vertex_count: usize, edges: &[Edge]) -> Vec<Vec<(usize, Cost)>> {
    let mut adj = vec![Vec::new(); vertex_count];
    for e in edges {
        if e.u == e.v {
            continue;
        }
        adj[e.u].push((e.v, e.deadheading_cost));
        adj[e.v].push((e.u, e.deadheading_cost));
    }
    adj
}

fn reachable_from(vertex_count: usize, edges: &[Edge], source: usize) -> Vec<bool> {
    let adj = adjacency(vertex_count, edges);
    let mut seen = vec![false; vertex_count];
    let mut queue = VecDeque::from([source]);
    seen[source] = true;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Dense table of shortest-path costs over deadheading costs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceTable {
    n: usize,
    data: Vec<Cost>,
}

impl DistanceTable {
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Cost {
        self.data[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[Cost] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    /// Builds a table from an explicit square matrix (row-major).
    pub fn from_matrix(n: usize, data: Vec<Cost>) -> DistanceTable {
        assert_eq!(data.len(), n * n, "distance matrix must be n x n");
        DistanceTable { n, data }
    }
}

/// Runs Dijkstra from every vertex. Unreachable pairs hold [`UNREACHABLE`].
pub fn shortest_paths(instance: &Instance) -> DistanceTable {
    let n = instance.vertex_count;
    let adj = adjacency(n, &instance.edges);
    let mut data = vec![UNREACHABLE; n * n];
    data.par_chunks_mut(n)
        .enumerate()
        .for_each(|(source, row)| dijkstra(&adj, source, row));
    DistanceTable { n, data }
}

fn dijkstra(adj: &[Vec<(usize, Cost)>], source: usize, dist: &mut [Cost]) {
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((nd, v)));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(u: usize, v: usize, cost: Cost, demand: Demand) -> Edge {
        Edge {
            u,
            v,
            demand,
            service_cost: cost,
            deadheading_cost: cost,
        }
    }

    #[test]
    fn task_ids_round_trip_through_inverse() {
        for i in 0..10 {
            let f = TaskId::forward(i);
            let r = TaskId::reverse(i);
            assert_eq!(f.inv(), r);
            assert_eq!(r.inv(), f);
            assert_eq!(f.task_index(), i);
            assert_eq!(r.task_index(), i);
            assert!(f.is_forward() && !r.is_forward());
        }
        assert_eq!(TaskId::DEPOT.inv(), TaskId::DEPOT);
    }

    #[test]
    fn head_and_tail_swap_under_inverse() {
        let inst = Instance::new("t", 3, vec![edge(0, 1, 2, 1), edge(1, 2, 3, 2)], 0, 5).unwrap();
        for id in inst.forward_ids() {
            assert_eq!(inst.head(id), inst.tail(id.inv()));
            assert_eq!(inst.tail(id), inst.head(id.inv()));
            assert_eq!(inst.demand(id), inst.demand(id.inv()));
        }
        assert_eq!(inst.head(TaskId::DEPOT), 0);
        assert_eq!(inst.tail(TaskId::DEPOT), 0);
        assert_eq!(inst.demand(TaskId::DEPOT), 0);
    }

    #[test]
    fn rejects_demand_above_capacity() {
        let err = Instance::new("t", 2, vec![edge(0, 1, 3, 6)], 0, 5).unwrap_err();
        assert!(matches!(err, InstanceError::DemandExceedsCapacity { .. }));
    }

    #[test]
    fn rejects_unreachable_task() {
        let edges = vec![edge(0, 1, 1, 1), edge(2, 3, 1, 1)];
        let err = Instance::new("t", 4, edges, 0, 5).unwrap_err();
        assert!(matches!(err, InstanceError::UnreachableTask { edge: 1, .. }));
    }

    #[test]
    fn rejects_dangling_vertex() {
        let err = Instance::new("t", 2, vec![edge(0, 2, 1, 1)], 0, 5).unwrap_err();
        assert!(matches!(err, InstanceError::DanglingVertex { vertex: 2, .. }));
    }

    #[test]
    fn triangle_prefers_two_hop_path() {
        let edges = vec![edge(0, 1, 1, 1), edge(1, 2, 1, 0), edge(0, 2, 5, 0)];
        let inst = Instance::new("tri", 3, edges, 0, 5).unwrap();
        let d = shortest_paths(&inst);
        assert_eq!(d.get(0, 2), 2);
        assert_eq!(d.get(2, 0), 2);
        assert_eq!(d.get(0, 0), 0);
    }

    #[test]
    fn path_graph_distance() {
        let edges = vec![edge(0, 1, 1, 1), edge(1, 2, 1, 1)];
        let inst = Instance::new("path", 3, edges, 0, 5).unwrap();
        assert_eq!(shortest_paths(&inst).get(0, 2), 2);
    }

    #[test]
    fn isolated_non_task_vertex_is_unreachable() {
        let inst = Instance::new("iso", 3, vec![edge(0, 1, 1, 1)], 0, 5).unwrap();
        let d = shortest_paths(&inst);
        assert_eq!(d.get(0, 2), UNREACHABLE);
        assert_eq!(d.get(2, 2), 0);
    }

    #[test]
    fn parallel_edges_and_self_loops_are_tasks() {
        let edges = vec![edge(0, 1, 1, 1), edge(0, 1, 2, 1), edge(1, 1, 4, 2)];
        let inst = Instance::new("par", 2, edges, 0, 5).unwrap();
        assert_eq!(inst.task_count(), 3);
        let d = shortest_paths(&inst);
        assert_eq!(d.get(0, 1), 1);
        assert_eq!(d.get(1, 1), 0);
    }
}
