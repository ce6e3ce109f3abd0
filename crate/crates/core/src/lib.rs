//! Capacitated arc routing with route-cutting-off decomposition.
//!
//! The pipeline: load an [`Instance`], bundle it with shortest paths, link
//! ranks and neighbour lists as a [`Problem`], then run one of the search
//! loops in [`search`]. [`harness`] drives seeded multi-run experiments.

// `!(x > 0.0)` is how parameter checks reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod decomposition;
pub mod graph;
pub mod harness;
pub mod io;
mod problem;
pub mod rank;
pub mod rco;
pub mod search;
pub mod solution;

pub use graph::{shortest_paths, Cost, Demand, DistanceTable, Edge, Instance, InstanceError, Task, TaskId, UNREACHABLE};
pub use io::{load_instance, load_instance_file, read_solution, write_instance, write_solution, LoadError};
pub use problem::Problem;
pub use rank::RankMatrix;
pub use rco::{rco_split, RcoParams, SubRoute, SubRoutePool};
pub use search::{solve, Algorithm, ClockMode, SearchConfig, SearchOutcome, SearchTrace};
pub use solution::{min_vehicles, validate, Route, Solution, ValidityReport, Violation};
