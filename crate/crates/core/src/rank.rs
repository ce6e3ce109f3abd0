//! Link costs between tasks and the per-task competition ranking of those links.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::graph::{Cost, DistanceTable, Instance, TaskId};

/// Four times the link cost between two tasks: the sum of shortest-path costs
/// over all four endpoint pairings. Kept integral so ties compare exactly.
pub fn link_cost_numerator(a: usize, b: usize, instance: &Instance, dist: &DistanceTable) -> Cost {
    let (fa, fb) = (TaskId::forward(a), TaskId::forward(b));
    let (ha, ta) = (instance.head(fa), instance.tail(fa));
    let (hb, tb) = (instance.head(fb), instance.tail(fb));
    dist.get(ha, hb) + dist.get(ha, tb) + dist.get(ta, hb) + dist.get(ta, tb)
}

/// Average shortest-path cost between the endpoints of two distinct tasks.
pub fn link_cost(a: usize, b: usize, instance: &Instance, dist: &DistanceTable) -> f64 {
    assert_ne!(a, b, "link cost of a task to itself is undefined");
    link_cost_numerator(a, b, instance, dist) as f64 / 4.0
}

/// Standard competition ranking: `rank[i] = 1 + #{j : costs[j] < costs[i]}`.
pub fn competition_ranks(costs: &[Cost]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by_key(|&i| costs[i]);
    let mut ranks = vec![0u32; costs.len()];
    let mut current = 0u32;
    for (pos, &i) in order.iter().enumerate() {
        if pos == 0 || costs[i] != costs[order[pos - 1]] {
            current = pos as u32 + 1;
        }
        ranks[i] = current;
    }
    ranks
}

#[derive(Clone, Debug)]
enum RankStore {
    U8(Vec<u8>),
    U16(Vec<u16>),
    U32(Vec<u32>),
}

impl RankStore {
    #[inline]
    fn get(&self, i: usize) -> u32 {
        match self {
            RankStore::U8(v) => v[i] as u32,
            RankStore::U16(v) => v[i] as u32,
            RankStore::U32(v) => v[i],
        }
    }
}

#[derive(Clone, Debug)]
enum LinkTable {
    Dense(Vec<Cost>),
    Endpoints {
        ends: Vec<(usize, usize)>,
        dist: Arc<DistanceTable>,
    },
}

/// Row-wise ranks of link costs. `rank(a, b)` is the rank of task `b` among
/// all links leaving task `a`; the matrix is not symmetric in general.
#[derive(Clone, Debug)]
pub struct RankMatrix {
    n: usize,
    ranks: RankStore,
    links: LinkTable,
}

fn fill_rows<T, F>(n: usize, row_costs: F) -> Vec<T>
where
    T: TryFrom<u32> + Default + Copy + Send,
    F: Fn(usize, &mut Vec<Cost>) + Sync,
{
    let mut data = vec![T::default(); n * n];
    if n == 0 {
        return data;
    }
    data.par_chunks_mut(n).enumerate().for_each_init(
        || Vec::with_capacity(n),
        |costs, (a, out)| {
            costs.clear();
            row_costs(a, costs);
            // Rank the n - 1 off-diagonal links only.
            let others: Vec<Cost> = (0..n).filter(|&b| b != a).map(|b| costs[b]).collect();
            let ranks = competition_ranks(&others);
            let mut k = 0;
            for (b, slot) in out.iter_mut().enumerate() {
                if b == a {
                    continue;
                }
                *slot = T::try_from(ranks[k]).unwrap_or_else(|_| unreachable!("rank width chosen from n"));
                k += 1;
            }
        },
    );
    data
}

fn rank_store<F>(n: usize, row_costs: F) -> RankStore
where
    F: Fn(usize, &mut Vec<Cost>) + Sync,
{
    if n <= u8::MAX as usize {
        RankStore::U8(fill_rows(n, row_costs))
    } else if n <= u16::MAX as usize {
        RankStore::U16(fill_rows(n, row_costs))
    } else {
        RankStore::U32(fill_rows(n, row_costs))
    }
}

impl RankMatrix {
    /// Ranks every task's links to all other tasks of `instance`.
    pub fn build(instance: &Instance, dist: Arc<DistanceTable>) -> RankMatrix {
        let ends: Vec<(usize, usize)> = instance.tasks.iter().map(|t| (t.u, t.v)).collect();
        let n = ends.len();
        let ranks = rank_store(n, |a, costs| {
            let (ha, ta) = ends[a];
            let (rh, rt) = (dist.row(ha), dist.row(ta));
            costs.extend(ends.iter().map(|&(hb, tb)| rh[hb] + rh[tb] + rt[hb] + rt[tb]));
        });
        RankMatrix {
            n,
            ranks,
            links: LinkTable::Endpoints { ends, dist },
        }
    }

    /// Ranks an explicit `n x n` row-major matrix of link-cost numerators
    /// (four times the link cost). The diagonal is ignored.
    pub fn from_link_numerators(n: usize, numerators: Vec<Cost>) -> RankMatrix {
        assert_eq!(numerators.len(), n * n);
        let ranks = rank_store(n, |a, costs| costs.extend_from_slice(&numerators[a * n..(a + 1) * n]));
        RankMatrix {
            n,
            ranks,
            links: LinkTable::Dense(numerators),
        }
    }

    pub fn task_count(&self) -> usize {
        self.n
    }

    /// Rank of the link from task `a` to task `b` (`a != b`), in `1..n`.
    #[inline]
    pub fn rank(&self, a: usize, b: usize) -> u32 {
        debug_assert_ne!(a, b);
        self.ranks.get(a * self.n + b)
    }

    /// Four times the link cost between tasks `a` and `b`.
    #[inline]
    pub fn link_numerator(&self, a: usize, b: usize) -> Cost {
        match &self.links {
            LinkTable::Dense(v) => v[a * self.n + b],
            LinkTable::Endpoints { ends, dist } => {
                let (ha, ta) = ends[a];
                let (hb, tb) = ends[b];
                dist.get(ha, hb) + dist.get(ha, tb) + dist.get(ta, hb) + dist.get(ta, tb)
            }
        }
    }

    #[inline]
    pub fn link(&self, a: usize, b: usize) -> f64 {
        self.link_numerator(a, b) as f64 / 4.0
    }

    /// Debug dump. `labels[i]` names task `i`; the diagonal is left blank.
    pub fn to_csv(&self, labels: &[String]) -> String {
        assert_eq!(labels.len(), self.n);
        let mut out = String::from("task");
        for l in labels {
            let _ = write!(out, ",\"{l}\"");
        }
        out.push('\n');
        for a in 0..self.n {
            let _ = write!(out, "\"{}\"", labels[a]);
            for b in 0..self.n {
                if a == b {
                    out.push(',');
                } else {
                    let _ = write!(out, ",{}", self.rank(a, b));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Task labels `(u,v)` with 1-based vertices, for [`RankMatrix::to_csv`].
pub fn task_labels(instance: &Instance) -> Vec<String> {
    instance
        .tasks
        .iter()
        .map(|t| format!("({},{})", t.u + 1, t.v + 1))
        .collect()
}
