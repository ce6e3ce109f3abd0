#![allow(dead_code)]

use carp_core::graph::DistanceTable;
use carp_core::solution::interior_cost;
use carp_core::{Cost, Instance, TaskId};

/// Exhaustive optimum: every task order and orientation, each split optimally
/// into consecutive capacity-feasible routes. Every solution is a split of
/// some oriented order, so this is exact.
pub fn brute_force_optimum(inst: &Instance, dist: &DistanceTable) -> Cost {
    let n = inst.task_count();
    assert!(n <= 7, "brute force is for tiny instances");
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = Cost::MAX;
    permute(&mut order, 0, &mut |perm| {
        for mask in 0u32..(1 << n) {
            let ids: Vec<TaskId> = perm
                .iter()
                .enumerate()
                .map(|(k, &t)| if mask >> k & 1 == 1 { TaskId::reverse(t) } else { TaskId::forward(t) })
                .collect();
            best = best.min(split(&ids, inst, dist));
        }
    });
    best
}

fn split(ids: &[TaskId], inst: &Instance, dist: &DistanceTable) -> Cost {
    let n = ids.len();
    let mut f = vec![Cost::MAX; n + 1];
    f[0] = 0;
    for j in 1..=n {
        for i in (0..j).rev() {
            let load: i64 = ids[i..j].iter().map(|&t| inst.demand(t)).sum();
            if load > inst.capacity {
                break;
            }
            if f[i] != Cost::MAX {
                f[j] = f[j].min(f[i] + interior_cost(&ids[i..j], inst, dist));
            }
        }
    }
    f[n]
}

fn permute<F: FnMut(&[usize])>(v: &mut Vec<usize>, k: usize, f: &mut F) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}
