use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::graph::TaskId;
use crate::rank::RankMatrix;
use crate::rco::SubRoutePool;

const MAX_ITERATIONS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterConfigError {
    #[error("group count must be at least 1")]
    NoGroups,
    #[error("fuzziness must be positive, got {0}")]
    BadFuzziness(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterConfig {
    groups: usize,
    fuzziness: f64,
}

impl ClusterConfig {
    pub fn new(groups: usize, fuzziness: f64) -> Result<ClusterConfig, ClusterConfigError> {
        if groups == 0 {
            return Err(ClusterConfigError::NoGroups);
        }
        if !(fuzziness > 0.0) || !fuzziness.is_finite() {
            return Err(ClusterConfigError::BadFuzziness(fuzziness));
        }
        Ok(ClusterConfig { groups, fuzziness })
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn fuzziness(&self) -> f64 {
        self.fuzziness
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            groups: 2,
            fuzziness: 5.0,
        }
    }
}

/// Mean link cost over all task pairs drawn from the two sub-routes. A sub-route
/// is at distance 0 from itself; a pair naming the same task contributes 0.
pub fn subroute_distance(a: &[TaskId], b: &[TaskId], ranks: &RankMatrix) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "sub-routes are never empty");
    if a == b {
        return 0.0;
    }
    let mut total: i64 = 0;
    for x in a {
        let xi = x.task_index();
        for y in b {
            let yi = y.task_index();
            if xi != yi {
                total += ranks.link_numerator(xi, yi);
            }
        }
    }
    total as f64 / 4.0 / (a.len() * b.len()) as f64
}

/// Picks `k` distinct indices: a random first one, then repeatedly the point
/// farthest from everything chosen so far (ties broken at random).
pub(crate) fn farthest_point<R, D>(m: usize, k: usize, dist: D, rng: &mut R) -> Vec<usize>
where
    R: Rng + ?Sized,
    D: Fn(usize, usize) -> f64,
{
    debug_assert!(k >= 1 && k <= m);
    let first = rng.random_range(0..m);
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = (0..m).map(|i| dist(i, first)).collect();
    let mut taken = vec![false; m];
    taken[first] = true;
    while chosen.len() < k {
        let best = (0..m)
            .filter(|&i| !taken[i])
            .map(|i| nearest[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..m).filter(|&i| !taken[i] && nearest[i] == best).collect();
        let next = *ties.choose(rng).expect("k <= m leaves a candidate");
        taken[next] = true;
        chosen.push(next);
        for i in 0..m {
            nearest[i] = nearest[i].min(dist(i, next));
        }
    }
    chosen
}

/// Groups sub-routes around `g` medoids with fuzzy, distance-weighted random
/// assignment. Returns, per group, the indices of its sub-routes in `pool`.
pub fn fuzzy_kmedoid<R: Rng + ?Sized>(
    pool: &SubRoutePool,
    config: ClusterConfig,
    ranks: &RankMatrix,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let m = pool.len();
    assert!(m > 0, "cannot cluster an empty pool");
    let mut g = config.groups();
    if m < g {
        log::warn!("only {m} sub-routes for {g} groups; reducing group count");
        g = m;
    }
    if g == 1 {
        return vec![(0..m).collect()];
    }

    let mut d = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let v = subroute_distance(&pool.subroutes[i].tasks, &pool.subroutes[j].tasks, ranks);
            d[i * m + j] = v;
            d[j * m + i] = v;
        }
    }
    let dist = |i: usize, j: usize| d[i * m + j];
    let alpha = config.fuzziness();

    let mut medoids = farthest_point(m, g, dist, rng);
    let mut assignment: Vec<usize> = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut next = vec![usize::MAX; m];
        for (j, &med) in medoids.iter().enumerate() {
            next[med] = j;
        }
        let mut weights = vec![0.0; g];
        for r in 0..m {
            if next[r] != usize::MAX {
                continue;
            }
            let zeros: Vec<usize> = (0..g).filter(|&j| dist(r, medoids[j]) == 0.0).collect();
            next[r] = if let Some(&j) = zeros.choose(rng) {
                j
            } else {
                // Weights (d_min / d_j)^alpha, proportional to d_j^-alpha.
                let dmin = medoids.iter().map(|&c| dist(r, c)).fold(f64::INFINITY, f64::min);
                for (j, &c) in medoids.iter().enumerate() {
                    weights[j] = (dmin / dist(r, c)).powf(alpha);
                }
                let total: f64 = weights.iter().sum();
                let mut pick = rng.random::<f64>() * total;
                let mut chosen = g - 1;
                for (j, w) in weights.iter().enumerate() {
                    if pick < *w {
                        chosen = j;
                        break;
                    }
                    pick -= w;
                }
                chosen
            };
        }
        repair_empty_groups(&mut next, &mut medoids, g, &dist);

        let stable = next == assignment;
        assignment = next;
        if stable {
            break;
        }
        for (j, med) in medoids.iter_mut().enumerate() {
            let members: Vec<usize> = (0..m).filter(|&r| assignment[r] == j).collect();
            let cost = |c: usize| members.iter().map(|&o| dist(c, o)).sum::<f64>();
            let best = members.iter().map(|&c| cost(c)).fold(f64::INFINITY, f64::min);
            let ties: Vec<usize> = members.iter().copied().filter(|&c| cost(c) == best).collect();
            *med = *ties.choose(rng).expect("groups are non-empty after repair");
        }
    }

    let mut groups = vec![Vec::new(); g];
    for (r, &j) in assignment.iter().enumerate() {
        groups[j].push(r);
    }
    groups
}

fn repair_empty_groups<D: Fn(usize, usize) -> f64>(
    assignment: &mut [usize],
    medoids: &mut [usize],
    g: usize,
    dist: &D,
) {
    loop {
        let mut sizes = vec![0usize; g];
        for &j in assignment.iter() {
            sizes[j] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let donor = (0..assignment.len())
            .filter(|&r| sizes[assignment[r]] > 1 && medoids[assignment[r]] != r)
            .max_by(|&a, &b| {
                dist(a, medoids[assignment[a]]).total_cmp(&dist(b, medoids[assignment[b]]))
            })
            .expect("more sub-routes than groups");
        assignment[donor] = empty;
        medoids[empty] = donor;
    }
}

/// Task IDs of each group, in pool order.
pub fn group_tasks(pool: &SubRoutePool, groups: &[Vec<usize>]) -> Vec<Vec<TaskId>> {
    groups
        .iter()
        .map(|g| g.iter().flat_map(|&i| pool.subroutes[i].tasks.iter().copied()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rco::SubRoute;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Tasks at positions on a line; link numerator = 4 * |x_a - x_b|.
    fn line_ranks(xs: &[i64]) -> RankMatrix {
        let n = xs.len();
        let nums = (0..n * n).map(|i| 4 * (xs[i / n] - xs[i % n]).abs()).collect();
        RankMatrix::from_link_numerators(n, nums)
    }

    fn pool_of(groups: &[&[usize]]) -> SubRoutePool {
        SubRoutePool {
            subroutes: groups
                .iter()
                .enumerate()
                .map(|(k, g)| SubRoute {
                    tasks: g.iter().map(|&t| TaskId::forward(t)).collect(),
                    origin: k,
                    offset: 0,
                })
                .collect(),
            cuts: vec![Vec::new(); groups.len()],
        }
    }

    #[test]
    fn config_validation() {
        assert_eq!(ClusterConfig::new(0, 1.0), Err(ClusterConfigError::NoGroups));
        assert!(ClusterConfig::new(2, 0.0).is_err());
        assert!(ClusterConfig::new(2, f64::NAN).is_err());
    }

    #[test]
    fn distance_cases() {
        let ranks = line_ranks(&[0, 3, 7]);
        let t = |i| TaskId::forward(i);
        assert_eq!(subroute_distance(&[t(0)], &[t(0)], &ranks), 0.0);
        assert_eq!(subroute_distance(&[t(0)], &[t(1)], &ranks), 3.0);
        assert_eq!(subroute_distance(&[t(0)], &[t(1), t(2)], &ranks), (3.0 + 7.0) / 2.0);
        assert_eq!(
            subroute_distance(&[t(1), t(2)], &[t(0)], &ranks),
            subroute_distance(&[t(0)], &[t(1), t(2)], &ranks)
        );
    }

    #[test]
    fn single_group_takes_everything() {
        let ranks = line_ranks(&[0, 1, 2, 3]);
        let pool = pool_of(&[&[0, 1], &[2], &[3]]);
        let cfg = ClusterConfig::new(1, 5.0).unwrap();
        let groups = fuzzy_kmedoid(&pool, cfg, &ranks, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(groups, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn degenerate_pool_reduces_group_count() {
        let ranks = line_ranks(&[0, 1]);
        let pool = pool_of(&[&[0, 1]]);
        let cfg = ClusterConfig::new(3, 5.0).unwrap();
        let groups = fuzzy_kmedoid(&pool, cfg, &ranks, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(groups, vec![vec![0]]);
    }

    #[test]
    fn groups_partition_the_pool() {
        let xs: Vec<i64> = (0..30).map(|i| (i * 37 % 101) as i64).collect();
        let ranks = line_ranks(&xs);
        let parts: Vec<Vec<usize>> = (0..10).map(|k| vec![3 * k, 3 * k + 1, 3 * k + 2]).collect();
        let refs: Vec<&[usize]> = parts.iter().map(|p| p.as_slice()).collect();
        let pool = pool_of(&refs);
        for seed in 0..10 {
            let cfg = ClusterConfig::new(4, 2.0).unwrap();
            let groups = fuzzy_kmedoid(&pool, cfg, &ranks, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(groups.len(), 4);
            assert!(groups.iter().all(|g| !g.is_empty()));
            let mut all: Vec<usize> = groups.concat();
            all.sort();
            assert_eq!(all, (0..10).collect::<Vec<_>>());
        }
    }
}
