//! First-improvement local search over relocation, swap, intra-route reversal
//! and inter-route tail exchange, restricted to granular neighbour lists.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::clock::Clock;
use crate::graph::{Cost, Demand, DistanceTable, Instance, TaskId};
use crate::problem::Problem;
use crate::rank::RankMatrix;
use crate::solution::Solution;

/// Neighbour candidates considered per task.
pub const NEIGHBOUR_COUNT: usize = 40;

const CHECK_EVERY: u64 = 256;
const ABSENT: usize = usize::MAX;

/// For every task, the closest other tasks by link cost, nearest first.
#[derive(Clone, Debug)]
pub struct Neighbors {
    lists: Vec<Vec<u32>>,
}

impl Neighbors {
    pub fn build(ranks: &RankMatrix, k: usize) -> Neighbors {
        let all: Vec<usize> = (0..ranks.task_count()).collect();
        Neighbors::restricted(ranks, &all, k)
    }

    /// Lists over `tasks` only; tasks outside the set get empty lists.
    pub fn restricted(ranks: &RankMatrix, tasks: &[usize], k: usize) -> Neighbors {
        let mut lists = vec![Vec::new(); ranks.task_count()];
        let built: Vec<(usize, Vec<u32>)> = tasks
            .par_iter()
            .map(|&a| {
                let mut cand: Vec<(Cost, usize)> = tasks
                    .iter()
                    .filter(|&&b| b != a)
                    .map(|&b| (ranks.link_numerator(a, b), b))
                    .collect();
                let keep = k.min(cand.len());
                if keep < cand.len() && keep > 0 {
                    cand.select_nth_unstable(keep - 1);
                }
                cand.truncate(keep);
                cand.sort_unstable();
                (a, cand.into_iter().map(|(_, b)| b as u32).collect())
            })
            .collect();
        for (a, l) in built {
            lists[a] = l;
        }
        Neighbors { lists }
    }

    pub fn of(&self, task: usize) -> &[u32] {
        &self.lists[task]
    }
}

#[derive(Clone, Copy, Debug)]
struct Seg {
    head: usize,
    tail: usize,
    cost: Cost,
    load: Demand,
    len: usize,
}

impl Seg {
    const EMPTY: Seg = Seg {
        head: 0,
        tail: 0,
        cost: 0,
        load: 0,
        len: 0,
    };

    fn rev(self) -> Seg {
        Seg {
            head: self.tail,
            tail: self.head,
            ..self
        }
    }
}

/// Part of a rebuilt route: a slice `[s, e)` of an existing route, possibly
/// reversed, or a single task.
#[derive(Clone, Copy, Debug)]
enum Piece {
    Slice { route: usize, s: usize, e: usize, rev: bool },
    Task(TaskId),
}

#[derive(Clone, Copy, Debug)]
struct Pieces {
    items: [Piece; 5],
    len: usize,
}

impl Pieces {
    fn of(list: &[Piece]) -> Pieces {
        let mut items = [Piece::Task(TaskId::DEPOT); 5];
        items[..list.len()].copy_from_slice(list);
        Pieces {
            items,
            len: list.len(),
        }
    }

    fn iter(&self) -> impl Iterator<Item = &Piece> {
        self.items[..self.len].iter()
    }
}

/// `second == None` means the move touches one route; `Some(NEW_ROUTE)` opens one.
const NEW_ROUTE: usize = usize::MAX - 1;

#[derive(Clone, Copy, Debug)]
struct Move {
    first: usize,
    first_pieces: Pieces,
    second: Option<usize>,
    second_pieces: Pieces,
}

struct State<'p> {
    inst: &'p Instance,
    dist: &'p DistanceTable,
    routes: Vec<Vec<TaskId>>,
    cum_cost: Vec<Vec<Cost>>,
    cum_load: Vec<Vec<Demand>>,
    cost: Vec<Cost>,
    pos: Vec<(usize, usize)>,
}

impl<'p> State<'p> {
    fn new(solution: &Solution, inst: &'p Instance, dist: &'p DistanceTable) -> State<'p> {
        let mut st = State {
            inst,
            dist,
            routes: Vec::new(),
            cum_cost: Vec::new(),
            cum_load: Vec::new(),
            cost: Vec::new(),
            pos: vec![(ABSENT, 0); inst.task_count()],
        };
        for r in solution.routes() {
            st.push_route(r.interior().to_vec());
        }
        st
    }

    fn push_route(&mut self, ids: Vec<TaskId>) -> usize {
        self.routes.push(ids);
        self.cum_cost.push(Vec::new());
        self.cum_load.push(Vec::new());
        self.cost.push(0);
        let r = self.routes.len() - 1;
        self.refresh(r);
        r
    }

    fn refresh(&mut self, r: usize) {
        let (inst, dist) = (self.inst, self.dist);
        let ids = &self.routes[r];
        let cc = &mut self.cum_cost[r];
        let cl = &mut self.cum_load[r];
        cc.clear();
        cl.clear();
        cc.push(0);
        cl.push(0);
        for (k, &id) in ids.iter().enumerate() {
            let link = if k > 0 {
                dist.get(inst.tail(ids[k - 1]), inst.head(id))
            } else {
                0
            };
            cc.push(cc[k] + inst.service_cost(id) + link);
            cl.push(cl[k] + inst.demand(id));
            self.pos[id.task_index()] = (r, k);
        }
        let whole = self.slice(r, 0, ids.len());
        self.cost[r] = self.join([whole].iter().copied()).0;
    }

    #[inline]
    fn single(&self, id: TaskId) -> Seg {
        Seg {
            head: self.inst.head(id),
            tail: self.inst.tail(id),
            cost: self.inst.service_cost(id),
            load: self.inst.demand(id),
            len: 1,
        }
    }

    #[inline]
    fn slice(&self, r: usize, s: usize, e: usize) -> Seg {
        if s >= e {
            return Seg::EMPTY;
        }
        let ids = &self.routes[r];
        let mut cost = self.cum_cost[r][e] - self.cum_cost[r][s];
        if s > 0 {
            cost -= self.dist.get(self.inst.tail(ids[s - 1]), self.inst.head(ids[s]));
        }
        Seg {
            head: self.inst.head(ids[s]),
            tail: self.inst.tail(ids[e - 1]),
            cost,
            load: self.cum_load[r][e] - self.cum_load[r][s],
            len: e - s,
        }
    }

    #[inline]
    fn seg(&self, p: &Piece) -> Seg {
        match *p {
            Piece::Slice { route, s, e, rev } => {
                let seg = self.slice(route, s, e);
                if rev {
                    seg.rev()
                } else {
                    seg
                }
            }
            Piece::Task(id) => self.single(id),
        }
    }

    #[inline]
    fn join(&self, segs: impl Iterator<Item = Seg>) -> (Cost, Demand) {
        let depot = self.inst.depot;
        let (mut cost, mut load, mut last, mut any) = (0, 0, depot, false);
        for s in segs.filter(|s| s.len > 0) {
            cost += self.dist.get(last, s.head) + s.cost;
            load += s.load;
            last = s.tail;
            any = true;
        }
        if any {
            cost += self.dist.get(last, depot);
        }
        (cost, load)
    }

    /// Cost change of a move, or `None` when it breaks capacity.
    fn delta(&self, m: &Move) -> Option<Cost> {
        let q = self.inst.capacity;
        let (c1, l1) = self.join(m.first_pieces.iter().map(|p| self.seg(p)));
        if l1 > q {
            return None;
        }
        let mut delta = c1 - self.cost[m.first];
        if let Some(r2) = m.second {
            let (c2, l2) = self.join(m.second_pieces.iter().map(|p| self.seg(p)));
            if l2 > q {
                return None;
            }
            delta += c2 - if r2 == NEW_ROUTE { 0 } else { self.cost[r2] };
        }
        Some(delta)
    }

    fn materialize(&self, pieces: &Pieces) -> Vec<TaskId> {
        let mut out = Vec::new();
        for p in pieces.iter() {
            match *p {
                Piece::Slice { route, s, e, rev } => {
                    let part = &self.routes[route][s.min(e)..e];
                    if rev {
                        out.extend(part.iter().rev().map(|t| t.inv()));
                    } else {
                        out.extend_from_slice(part);
                    }
                }
                Piece::Task(id) => out.push(id),
            }
        }
        out
    }

    fn apply(&mut self, m: &Move) {
        let first = self.materialize(&m.first_pieces);
        let second = m.second.map(|_| self.materialize(&m.second_pieces));
        self.routes[m.first] = first;
        self.refresh(m.first);
        if let (Some(r2), Some(ids)) = (m.second, second) {
            if r2 == NEW_ROUTE {
                self.push_route(ids);
            } else {
                self.routes[r2] = ids;
                self.refresh(r2);
            }
        }
    }

    fn total(&self) -> Cost {
        self.cost.iter().sum()
    }

    fn into_solution(self) -> Solution {
        let inst = self.inst;
        let dist = self.dist;
        Solution::from_interiors(self.routes.into_iter().filter(|r| !r.is_empty()), inst, dist)
    }
}

fn slice(route: usize, s: usize, e: usize) -> Piece {
    Piece::Slice {
        route,
        s,
        e,
        rev: false,
    }
}

fn rslice(route: usize, s: usize, e: usize) -> Piece {
    Piece::Slice { route, s, e, rev: true }
}

fn one(first: usize, pieces: &[Piece]) -> Move {
    Move {
        first,
        first_pieces: Pieces::of(pieces),
        second: None,
        second_pieces: Pieces::of(&[]),
    }
}

fn two(first: usize, p1: &[Piece], second: usize, p2: &[Piece]) -> Move {
    Move {
        first,
        first_pieces: Pieces::of(p1),
        second: Some(second),
        second_pieces: Pieces::of(p2),
    }
}

/// Candidate moves pairing task `u` with neighbour `w`.
fn moves_for(st: &State, u: usize, w: usize, out: &mut Vec<Move>) {
    let (r1, i) = st.pos[u];
    let (r2, j) = st.pos[w];
    let a = st.routes[r1][i];
    let b = st.routes[r2][j];
    let l1 = st.routes[r1].len();
    let l2 = st.routes[r2].len();

    // Relocate u next to w (after and before), both orientations.
    for q in [j + 1, j] {
        for ao in [a, a.inv()] {
            if r1 != r2 {
                out.push(two(
                    r1,
                    &[slice(r1, 0, i), slice(r1, i + 1, l1)],
                    r2,
                    &[slice(r2, 0, q), Piece::Task(ao), slice(r2, q, l2)],
                ));
            } else if q == i || q == i + 1 {
                if ao != a {
                    out.push(one(r1, &[slice(r1, 0, i), Piece::Task(ao), slice(r1, i + 1, l1)]));
                }
            } else if q < i {
                out.push(one(
                    r1,
                    &[slice(r1, 0, q), Piece::Task(ao), slice(r1, q, i), slice(r1, i + 1, l1)],
                ));
            } else {
                out.push(one(
                    r1,
                    &[slice(r1, 0, i), slice(r1, i + 1, q), Piece::Task(ao), slice(r1, q, l1)],
                ));
            }
        }
    }

    // Swap, all four orientation pairs.
    for ao in [a, a.inv()] {
        for bo in [b, b.inv()] {
            if r1 != r2 {
                out.push(two(
                    r1,
                    &[slice(r1, 0, i), Piece::Task(bo), slice(r1, i + 1, l1)],
                    r2,
                    &[slice(r2, 0, j), Piece::Task(ao), slice(r2, j + 1, l2)],
                ));
            } else {
                let (lo, hi, x, y) = if i < j { (i, j, bo, ao) } else { (j, i, ao, bo) };
                out.push(one(
                    r1,
                    &[
                        slice(r1, 0, lo),
                        Piece::Task(x),
                        slice(r1, lo + 1, hi),
                        Piece::Task(y),
                        slice(r1, hi + 1, l1),
                    ],
                ));
            }
        }
    }

    if r1 == r2 {
        // Segment reversals spanning the pair.
        let (lo, hi) = (i.min(j), i.max(j));
        for (s, e) in [(lo, hi + 1), (lo + 1, hi + 1), (lo, hi)] {
            if e > s {
                out.push(one(r1, &[slice(r1, 0, s), rslice(r1, s, e), slice(r1, e, l1)]));
            }
        }
    } else {
        // Tail exchange so that u is followed by w, or by w reversed.
        out.push(two(
            r1,
            &[slice(r1, 0, i + 1), slice(r2, j, l2)],
            r2,
            &[slice(r2, 0, j), slice(r1, i + 1, l1)],
        ));
        out.push(two(
            r1,
            &[slice(r1, 0, i + 1), rslice(r2, 0, j + 1)],
            r2,
            &[rslice(r1, i + 1, l1), slice(r2, j + 1, l2)],
        ));
    }
}

/// Improves `solution` until no listed move helps, the clock expires, or
/// `max_evaluations` moves have been evaluated. Only tasks present in the
/// solution are touched, so the same routine solves sub-problems.
pub fn local_search<R: Rng + ?Sized>(
    solution: Solution,
    problem: &Problem,
    clock: &mut Clock,
    max_evaluations: Option<u64>,
    rng: &mut R,
) -> Solution {
    let present = solution.task_count();
    if present == problem.instance.task_count() {
        return local_search_within(solution, problem, &problem.neighbors, clock, max_evaluations, rng);
    }
    let tasks: Vec<usize> = solution
        .routes()
        .iter()
        .flat_map(|r| r.interior().iter().map(|t| t.task_index()))
        .collect();
    let neighbors = Neighbors::restricted(&problem.ranks, &tasks, NEIGHBOUR_COUNT);
    local_search_within(solution, problem, &neighbors, clock, max_evaluations, rng)
}

/// [`local_search`] with caller-supplied neighbour lists, for repeated calls
/// on the same task subset.
pub fn local_search_within<R: Rng + ?Sized>(
    solution: Solution,
    problem: &Problem,
    neighbors: &Neighbors,
    clock: &mut Clock,
    max_evaluations: Option<u64>,
    rng: &mut R,
) -> Solution {
    let inst = &problem.instance;
    let dist = &*problem.dist;
    let mut st = State::new(&solution, inst, dist);
    let present: Vec<usize> = (0..inst.task_count()).filter(|&t| st.pos[t].0 != ABSENT).collect();
    if present.is_empty() {
        return solution;
    }

    let start_cost = st.total();
    let mut evaluations: u64 = 0;
    let mut pending: u64 = 0;
    let mut order = present.clone();
    let mut nbrs: Vec<u32> = Vec::new();
    let mut moves: Vec<Move> = Vec::new();
    let mut out_of_budget = false;

    'passes: loop {
        let mut improved = false;
        order.shuffle(rng);
        for &u in &order {
            nbrs.clear();
            nbrs.extend_from_slice(neighbors.of(u));
            nbrs.shuffle(rng);
            let mut applied = false;
            for &w in &nbrs {
                let w = w as usize;
                if st.pos[w].0 == ABSENT {
                    continue;
                }
                moves.clear();
                moves_for(&st, u, w, &mut moves);
                let (r1, i) = st.pos[u];
                if w == nbrs[0] as usize && st.routes[r1].len() > 1 {
                    // Serving u on its own route.
                    let l1 = st.routes[r1].len();
                    moves.push(two(
                        r1,
                        &[slice(r1, 0, i), slice(r1, i + 1, l1)],
                        NEW_ROUTE,
                        &[Piece::Task(st.routes[r1][i])],
                    ));
                }
                for m in &moves {
                    evaluations += 1;
                    pending += 1;
                    if let Some(d) = st.delta(m) {
                        if d < 0 {
                            st.apply(m);
                            if cfg!(debug_assertions) {
                                check_consistency(&st);
                            }
                            applied = true;
                            break;
                        }
                    }
                }
                if pending >= CHECK_EVERY {
                    clock.charge(pending);
                    pending = 0;
                    if clock.expired() || max_evaluations.is_some_and(|m| evaluations >= m) {
                        out_of_budget = true;
                    }
                }
                if applied || out_of_budget {
                    break;
                }
            }
            improved |= applied;
            if out_of_budget {
                break 'passes;
            }
        }
        if !improved {
            break;
        }
    }
    clock.charge(pending);
    debug_assert!(st.total() <= start_cost);
    st.into_solution()
}

fn check_consistency(st: &State) {
    for (r, ids) in st.routes.iter().enumerate() {
        let fresh = crate::solution::interior_cost(ids, st.inst, st.dist);
        assert_eq!(fresh, st.cost[r], "cached route cost drifted");
        for (k, id) in ids.iter().enumerate() {
            assert_eq!(st.pos[id.task_index()], (r, k));
        }
    }
}
