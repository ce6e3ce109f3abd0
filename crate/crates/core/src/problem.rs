use std::sync::Arc;

use crate::graph::{shortest_paths, DistanceTable, Instance};
use crate::rank::RankMatrix;
use crate::search::local::{Neighbors, NEIGHBOUR_COUNT};

/// An instance together with the tables every search path needs.
#[derive(Clone, Debug)]
pub struct Problem {
    pub instance: Instance,
    pub dist: Arc<DistanceTable>,
    pub ranks: RankMatrix,
    pub neighbors: Neighbors,
}

impl Problem {
    pub fn new(instance: Instance) -> Problem {
        let dist = Arc::new(shortest_paths(&instance));
        let ranks = RankMatrix::build(&instance, Arc::clone(&dist));
        let neighbors = Neighbors::build(&ranks, NEIGHBOUR_COUNT);
        Problem {
            instance,
            dist,
            ranks,
            neighbors,
        }
    }
}
