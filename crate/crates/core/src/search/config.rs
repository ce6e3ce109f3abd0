use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use super::clock::ClockMode;
use crate::decomposition::ClusterConfig;
use crate::rco::RcoParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Hierarchical decomposition with route cutting off.
    SahidRco,
    /// Hierarchical decomposition with one random cut per route.
    SahidRandom,
    /// Sub-route clustering with route cutting off.
    ClusterRco,
    /// Sub-route clustering of whole routes.
    ClusterWholeRoute,
    /// Restarted construction plus local search, no decomposition.
    LocalOnly,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::SahidRco,
        Algorithm::SahidRandom,
        Algorithm::ClusterRco,
        Algorithm::ClusterWholeRoute,
        Algorithm::LocalOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SahidRco => "sahid-rco",
            Algorithm::SahidRandom => "sahid-random",
            Algorithm::ClusterRco => "cluster-rco",
            Algorithm::ClusterWholeRoute => "cluster-whole-route",
            Algorithm::LocalOnly => "local-only",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ConfigError::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("acceptance threshold must be >= 1, got {0}")]
    AcceptThreshold(f64),
    #[error("time limit must be positive, got {0}")]
    TimeLimit(f64),
    #[error("scale must lie in (0, 1), got {0}")]
    Scale(f64),
    #[error("pool size must be at least 1")]
    PoolSize,
    #[error("{0} cannot be run by this search loop")]
    WrongAlgorithm(Algorithm),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub rco: RcoParams,
    pub cluster: ClusterConfig,
    /// Fraction of units that become cluster medoids at each level of the
    /// hierarchical construction.
    pub scale: f64,
    /// A worse candidate within this factor of the current cost may be taken
    /// once the search has idled for `idle_limit` iterations.
    pub accept_threshold: f64,
    pub idle_limit: u64,
    pub max_cycles: u64,
    /// Seconds.
    pub time_limit: f64,
    pub seed: u64,
    /// Move evaluations allowed per sub-problem local search; `None` runs to a
    /// local optimum (or the time limit).
    pub sub_solver_budget: Option<u64>,
    /// Solutions kept by the clustering search.
    pub pool_size: usize,
    pub clock: ClockMode,
    /// Hard cap on outer iterations.
    pub max_iterations: Option<u64>,
    /// Stop after this many outer iterations without a new best.
    pub stall_limit: Option<u64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            algorithm: Algorithm::SahidRco,
            rco: RcoParams::default(),
            cluster: ClusterConfig::default(),
            scale: 0.1,
            accept_threshold: 1.10,
            idle_limit: 10_000,
            max_cycles: 50,
            time_limit: 60.0,
            seed: 0,
            sub_solver_budget: None,
            pool_size: 5,
            clock: ClockMode::Wall,
            max_iterations: None,
            stall_limit: None,
        }
    }
}

impl SearchConfig {
    pub fn with_algorithm(algorithm: Algorithm) -> SearchConfig {
        SearchConfig {
            algorithm,
            ..SearchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.accept_threshold >= 1.0) {
            return Err(ConfigError::AcceptThreshold(self.accept_threshold));
        }
        if !(self.time_limit > 0.0) || !self.time_limit.is_finite() {
            return Err(ConfigError::TimeLimit(self.time_limit));
        }
        if !(self.scale > 0.0 && self.scale < 1.0) {
            return Err(ConfigError::Scale(self.scale));
        }
        if self.pool_size == 0 {
            return Err(ConfigError::PoolSize);
        }
        Ok(())
    }

    pub fn time_budget(&self) -> Duration {
        Duration::from_secs_f64(self.time_limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("maens".parse::<Algorithm>().is_err());
    }

    #[test]
    fn defaults_are_valid() {
        let c = SearchConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.rco.lambda(), 0.05);
        assert_eq!(c.rco.theta(), 0.2);
        assert_eq!(c.cluster.groups(), 2);
        assert_eq!(c.cluster.fuzziness(), 5.0);
        assert_eq!(c.accept_threshold, 1.10);
        assert_eq!(c.idle_limit, 10_000);
        assert_eq!(c.max_cycles, 50);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = SearchConfig {
            accept_threshold: 0.9,
            ..SearchConfig::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::AcceptThreshold(0.9)));
        c.accept_threshold = 1.0;
        c.time_limit = 0.0;
        assert_eq!(c.validate(), Err(ConfigError::TimeLimit(0.0)));
    }
}
