//! Budget clocks.
//!
//! A wall clock measures real time. A virtual clock measures work: every
//! evaluated move is charged to it, and elapsed milliseconds are derived from
//! the charged work, so runs are reproducible down to their trace timestamps.

use std::str::FromStr;
use std::time::{Duration, Instant};

/// Work units (move evaluations) that make up one virtual millisecond.
pub const WORK_PER_VIRTUAL_MS: u64 = 2_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ClockMode {
    #[default]
    Wall,
    Virtual,
}

impl FromStr for ClockMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wall" => Ok(ClockMode::Wall),
            "virtual" => Ok(ClockMode::Virtual),
            other => Err(format!("unknown clock `{other}` (expected wall or virtual)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Clock {
    mode: ClockMode,
    start: Instant,
    work: u64,
    limit_ms: u64,
}

impl Clock {
    pub fn new(mode: ClockMode, limit: Duration) -> Clock {
        Clock {
            mode,
            start: Instant::now(),
            work: 0,
            limit_ms: limit.as_millis().min(u64::MAX as u128) as u64,
        }
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    #[inline]
    pub fn charge(&mut self, units: u64) {
        self.work += units;
    }

    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn elapsed_ms(&self) -> u64 {
        match self.mode {
            ClockMode::Wall => self.start.elapsed().as_millis() as u64,
            ClockMode::Virtual => self.work / WORK_PER_VIRTUAL_MS,
        }
    }

    pub fn limit_ms(&self) -> u64 {
        self.limit_ms
    }

    pub fn expired(&self) -> bool {
        self.elapsed_ms() >= self.limit_ms
    }

    /// A clock for a concurrent worker, starting from this clock's state.
    pub fn fork(&self) -> Clock {
        self.clone()
    }

    /// Folds finished workers back in. Workers ran side by side, so virtual
    /// time advances by the slowest one.
    pub fn absorb<'a>(&mut self, workers: impl IntoIterator<Item = &'a Clock>) {
        if let Some(w) = workers.into_iter().map(|c| c.work).max() {
            self.work = self.work.max(w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_clock_counts_work() {
        let mut c = Clock::new(ClockMode::Virtual, Duration::from_millis(3));
        assert!(!c.expired());
        c.charge(2 * WORK_PER_VIRTUAL_MS);
        assert_eq!(c.elapsed_ms(), 2);
        c.charge(WORK_PER_VIRTUAL_MS);
        assert!(c.expired());
    }

    #[test]
    fn absorb_takes_slowest_worker() {
        let c = Clock::new(ClockMode::Virtual, Duration::from_secs(1));
        let mut a = c.fork();
        let mut b = c.fork();
        a.charge(10);
        b.charge(30);
        let mut c = c;
        c.absorb([&a, &b]);
        assert_eq!(c.work(), 30);
    }
}
