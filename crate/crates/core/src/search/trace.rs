use std::fmt;
use std::io::Write;

use crate::graph::Cost;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TracePoint {
    pub elapsed_ms: u64,
    pub best_cost: Cost,
}

/// What one outer iteration (or cycle) did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleInfo {
    pub index: u64,
    pub elapsed_ms: u64,
    pub subroutes: usize,
    pub groups: usize,
    pub candidate_cost: Cost,
    pub accepted: bool,
}

/// Best-so-far history of a run. Optionally streams `elapsed_ms,best_cost`
/// rows to a sink, flushing after each row.
#[derive(Default)]
pub struct SearchTrace {
    pub points: Vec<TracePoint>,
    pub cycles: Vec<CycleInfo>,
    pub iterations: u64,
    pub accepted_worse: u64,
    sink: Option<Box<dyn Write + Send>>,
}

impl fmt::Debug for SearchTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SearchTrace")
            .field("points", &self.points)
            .field("iterations", &self.iterations)
            .field("accepted_worse", &self.accepted_worse)
            .finish_non_exhaustive()
    }
}

impl SearchTrace {
    pub fn new() -> SearchTrace {
        SearchTrace::default()
    }

    pub fn with_sink(mut sink: Box<dyn Write + Send>) -> SearchTrace {
        if let Err(e) = writeln!(sink, "elapsed_ms,best_cost").and_then(|_| sink.flush()) {
            log::warn!("trace sink: {e}");
        }
        SearchTrace {
            sink: Some(sink),
            ..SearchTrace::default()
        }
    }

    pub fn best(&self) -> Option<Cost> {
        self.points.last().map(|p| p.best_cost)
    }

    /// Records a new best cost. Costs that do not improve are ignored.
    pub fn improve(&mut self, elapsed_ms: u64, cost: Cost) {
        if self.best().is_some_and(|b| cost >= b) {
            return;
        }
        self.push(TracePoint {
            elapsed_ms,
            best_cost: cost,
        });
    }

    /// Final sample at termination.
    pub fn finish(&mut self, elapsed_ms: u64) {
        if let Some(best) = self.best() {
            self.push(TracePoint {
                elapsed_ms,
                best_cost: best,
            });
        }
        self.sink = None;
    }

    fn push(&mut self, p: TracePoint) {
        if let Some(sink) = self.sink.as_mut() {
            let res = writeln!(sink, "{},{}", p.elapsed_ms, p.best_cost).and_then(|_| sink.flush());
            if let Err(e) = res {
                log::warn!("trace sink: {e}");
            }
        }
        self.points.push(p);
    }

    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].best_cost <= w[0].best_cost)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("elapsed_ms,best_cost\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.elapsed_ms, p.best_cost));
        }
        out
    }
}
