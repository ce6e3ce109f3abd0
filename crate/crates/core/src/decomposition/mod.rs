//! Turning a sub-route pool into sub-problems.
//!
//! Two paths exist: grouping sub-routes with fuzzy k-medoids (each group's tasks
//! form a sub-problem), and treating each sub-route as a virtual task that is
//! re-assembled into a full solution by hierarchical construction.

mod hdu;
mod kmedoid;

pub use hdu::{build_virtual_tasks, endpoint_distance, hdu, VirtualTask};
pub use kmedoid::{fuzzy_kmedoid, group_tasks, subroute_distance, ClusterConfig, ClusterConfigError};
