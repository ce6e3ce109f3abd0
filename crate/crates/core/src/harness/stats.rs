//! Rank-sum tests and win/draw/loss tables.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use super::experiment::RunRecord;

/// Samples at or below this combined size get an exact p-value.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("each sample needs at least 3 values (got {0} and {1})")]
    TooSmall(usize, usize),
    #[error("non-finite value in sample")]
    NotFinite,
    #[error("run counts differ for instance {instance}: {reference} has {a}, {variant} has {b}")]
    Mismatch {
        instance: String,
        reference: String,
        variant: String,
        a: usize,
        b: usize,
    },
    #[error("reference variant `{0}` has no runs")]
    NoReference(String),
    #[error("need at least two variants")]
    OneVariant,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankSumTest {
    /// Rank sum of the first sample, midranks for ties.
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    pub exact: bool,
    /// Every value in both samples is the same.
    pub degenerate: bool,
}

fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Wilcoxon rank-sum (Mann-Whitney) test, two-sided.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSumTest, StatsError> {
    rank_sum(a, b, false)
}

/// The large-sample branch of [`wilcoxon_rank_sum`] at any sample size.
pub fn wilcoxon_rank_sum_normal(a: &[f64], b: &[f64]) -> Result<RankSumTest, StatsError> {
    rank_sum(a, b, true)
}

fn rank_sum(a: &[f64], b: &[f64], force_normal: bool) -> Result<RankSumTest, StatsError> {
    if a.len() < 3 || b.len() < 3 {
        return Err(StatsError::TooSmall(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(StatsError::NotFinite);
    }
    let (na, n) = (a.len(), a.len() + b.len());
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&all);
    let w: f64 = ranks[..na].iter().sum();
    let mean = na as f64 * (n as f64 + 1.0) / 2.0;

    if all.iter().all(|&x| x == all[0]) {
        return Ok(RankSumTest {
            statistic: w,
            p_value: 1.0,
            exact: n <= EXACT_LIMIT && !force_normal,
            degenerate: true,
        });
    }

    if n <= EXACT_LIMIT && !force_normal {
        let observed = (w - mean).abs() - 1e-9;
        let (mut extreme, mut total) = (0u64, 0u64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != na {
                continue;
            }
            let s: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            total += 1;
            if (s - mean).abs() >= observed {
                extreme += 1;
            }
        }
        return Ok(RankSumTest {
            statistic: w,
            p_value: extreme as f64 / total as f64,
            exact: true,
            degenerate: false,
        });
    }

    let nb = (n - na) as f64;
    let mut tie_term = 0.0;
    let mut sorted = all.clone();
    sorted.sort_by(f64::total_cmp);
    for run in sorted.chunk_by(|x, y| x == y) {
        let t = run.len() as f64;
        tie_term += t * t * t - t;
    }
    let nf = n as f64;
    let var = na as f64 * nb / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let z = (((w - mean).abs() - 0.5).max(0.0)) / var.sqrt();
    let normal = Normal::standard();
    let p = (2.0 * (1.0 - normal.cdf(z))).min(1.0);
    Ok(RankSumTest {
        statistic: w,
        p_value: p,
        exact: false,
        degenerate: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Win,
    Draw,
    Loss,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub instance: String,
    pub reference_mean: f64,
    pub other_mean: f64,
    pub p_value: f64,
    pub outcome: Outcome,
}

/// Reference variant against one other variant.
#[derive(Clone, Debug, PartialEq)]
pub struct WdlRow {
    pub variant: String,
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub comparisons: Vec<Comparison>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Compares `reference` with every other variant, per instance. Lower cost is
/// better. Failed runs are ignored.
pub fn significance_table(records: &[RunRecord], reference: &str, alpha: f64) -> Result<Vec<WdlRow>, StatsError> {
    // variant -> instance -> costs
    let mut cells: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        let Some(cost) = r.final_cost else { continue };
        cells
            .entry(r.variant.as_str())
            .or_default()
            .entry(r.instance.as_str())
            .or_default()
            .push(cost as f64);
    }
    let refs = cells.get(reference).ok_or_else(|| StatsError::NoReference(reference.to_string()))?;
    if cells.len() < 2 {
        return Err(StatsError::OneVariant);
    }
    let mut rows = Vec::new();
    for (&variant, per_instance) in cells.iter().filter(|(v, _)| **v != reference) {
        let mut row = WdlRow {
            variant: variant.to_string(),
            wins: 0,
            draws: 0,
            losses: 0,
            comparisons: Vec::new(),
        };
        for (&instance, a) in refs {
            let Some(b) = per_instance.get(instance) else { continue };
            if a.len() != b.len() {
                return Err(StatsError::Mismatch {
                    instance: instance.to_string(),
                    reference: reference.to_string(),
                    variant: variant.to_string(),
                    a: a.len(),
                    b: b.len(),
                });
            }
            let test = wilcoxon_rank_sum(a, b)?;
            let (ma, mb) = (mean(a), mean(b));
            let outcome = if test.p_value >= alpha || ma == mb {
                row.draws += 1;
                Outcome::Draw
            } else if ma < mb {
                row.wins += 1;
                Outcome::Win
            } else {
                row.losses += 1;
                Outcome::Loss
            };
            row.comparisons.push(Comparison {
                instance: instance.to_string(),
                reference_mean: ma,
                other_mean: mb,
                p_value: test.p_value,
                outcome,
            });
        }
        rows.push(row);
    }
    Ok(rows)
}
