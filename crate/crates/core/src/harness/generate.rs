//! Random geometric test instances.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Cost, Demand, Edge, Instance};

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("need at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("need at least 1 task")]
    NoTasks,
    #[error("{tasks} tasks exceed the {max} possible edges on {vertices} vertices")]
    TooManyTasks { tasks: usize, vertices: usize, max: usize },
    #[error("capacity must be positive")]
    Capacity,
}

/// Points scattered on a square, joined to their nearest neighbours (and
/// across components until connected). Costs are rounded Euclidean lengths,
/// at least 1, equal for service and deadheading. `tasks` edges picked at
/// random carry demand uniform in `1..=max(1, capacity / 3)`. The depot is
/// the vertex nearest the centre.
pub fn generate_instance(vertices: usize, tasks: usize, capacity: Demand, seed: u64) -> Result<Instance, GenerateError> {
    if vertices < 2 {
        return Err(GenerateError::TooFewVertices(vertices));
    }
    if tasks == 0 {
        return Err(GenerateError::NoTasks);
    }
    let max = vertices * (vertices - 1) / 2;
    if tasks > max {
        return Err(GenerateError::TooManyTasks { tasks, vertices, max });
    }
    if capacity < 1 {
        return Err(GenerateError::Capacity);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 10.0 * (vertices as f64).sqrt();
    let pts: Vec<(f64, f64)> = (0..vertices)
        .map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect();
    let d = |a: usize, b: usize| ((pts[a].0 - pts[b].0).powi(2) + (pts[a].1 - pts[b].1).powi(2)).sqrt();

    let mut k = (2 * tasks).div_ceil(vertices).max(3) + 1;
    let mut pairs: BTreeSet<(usize, usize)>;
    loop {
        pairs = BTreeSet::new();
        let k_eff = k.min(vertices - 1);
        for a in 0..vertices {
            let mut near: Vec<(f64, usize)> = (0..vertices).filter(|&b| b != a).map(|b| (d(a, b), b)).collect();
            near.select_nth_unstable_by(k_eff - 1, |x, y| x.0.total_cmp(&y.0));
            for &(_, b) in &near[..k_eff] {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
        connect(&mut pairs, vertices, &d);
        if pairs.len() >= tasks || k_eff == vertices - 1 {
            break;
        }
        k *= 2;
    }

    let mut edges: Vec<(usize, usize)> = pairs.into_iter().collect();
    edges.shuffle(&mut rng);
    let hi = (capacity / 3).max(1);
    let edges = edges
        .into_iter()
        .enumerate()
        .map(|(i, (u, v))| {
            let cost = (d(u, v).round() as Cost).max(1);
            Edge {
                u,
                v,
                demand: if i < tasks { rng.random_range(1..=hi) } else { 0 },
                service_cost: cost,
                deadheading_cost: cost,
            }
        })
        .collect();
    let centre = (side / 2.0, side / 2.0);
    let depot = (0..vertices)
        .min_by(|&a, &b| {
            let da = (pts[a].0 - centre.0).hypot(pts[a].1 - centre.1);
            let db = (pts[b].0 - centre.0).hypot(pts[b].1 - centre.1);
            da.total_cmp(&db)
        })
        .expect("vertices exist");
    let name = format!("gen-{vertices}-{tasks}-{capacity}-{seed}");
    Ok(Instance::new(name, vertices, edges, depot, capacity).expect("generated instances are valid"))
}

/// Adds the shortest bridge from the depot-side component to the rest until
/// the graph is connected.
fn connect<D: Fn(usize, usize) -> f64>(pairs: &mut BTreeSet<(usize, usize)>, n: usize, d: &D) {
    loop {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in pairs.iter() {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            return;
        }
        let inside: Vec<usize> = (0..n).filter(|&v| seen[v]).collect();
        let mut best = (f64::INFINITY, 0, 0);
        for v in (0..n).filter(|&v| !seen[v]) {
            for &u in &inside {
                let dd = d(u, v);
                if dd < best.0 {
                    best = (dd, u, v);
                }
            }
        }
        pairs.insert((best.1.min(best.2), best.1.max(best.2)));
    }
}
