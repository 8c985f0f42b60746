use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryGuardConfig {
    pub budget_bytes: u64,
    /// Check after every `check_interval` batches.
    #[serde(default = "one")]
    pub check_interval: usize,
}

fn one() -> usize {
    1
}

impl MemoryGuardConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget_bytes == 0 {
            return Err(Error::InvalidArgument("memory budget must be > 0".into()));
        }
        if self.check_interval == 0 {
            return Err(Error::InvalidArgument("memory check interval must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardAction {
    Continue,
    Recycle,
}

/// Recycle strictly above the budget.
pub fn memory_guard_check(estimate: u64, config: &MemoryGuardConfig) -> GuardAction {
    if estimate > config.budget_bytes {
        GuardAction::Recycle
    } else {
        GuardAction::Continue
    }
}

/// Source of resident-memory estimates.
pub trait MemoryEstimator: Send + Sync {
    fn resident_bytes(&self) -> u64;
}

/// Resident set size of this process, from `/proc/self/status`. Reads as 0
/// where that file is unavailable.
#[derive(Debug, Default, Clone, Copy)]
pub struct ProcessRss;

impl MemoryEstimator for ProcessRss {
    fn resident_bytes(&self) -> u64 {
        std::fs::read_to_string("/proc/self/status")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find_map(|l| l.strip_prefix("VmRSS:"))
                    .and_then(|v| v.trim().trim_end_matches("kB").trim().parse::<u64>().ok())
            })
            .map_or(0, |kb| kb * 1024)
    }
}

/// Replays a fixed list of readings, then repeats the last one.
#[derive(Debug, Default)]
pub struct ScriptedEstimator {
    readings: Vec<u64>,
    next: AtomicUsize,
}

impl ScriptedEstimator {
    pub fn new(readings: Vec<u64>) -> Self {
        ScriptedEstimator {
            readings,
            next: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.next.load(Ordering::SeqCst)
    }
}

impl MemoryEstimator for ScriptedEstimator {
    fn resident_bytes(&self) -> u64 {
        let i = self.next.fetch_add(1, Ordering::SeqCst);
        self.readings.get(i).or(self.readings.last()).copied().unwrap_or(0)
    }
}

/// An estimator driven by a shared counter, so test steps can simulate
/// allocations and workers can reset it on recycle.
#[derive(Debug, Default, Clone)]
pub struct CounterEstimator(pub Arc<AtomicU64>);

impl MemoryEstimator for CounterEstimator {
    fn resident_bytes(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Clone)]
pub struct MemoryGuard {
    pub config: MemoryGuardConfig,
    pub estimator: Arc<dyn MemoryEstimator>,
}

impl MemoryGuard {
    pub fn new(config: MemoryGuardConfig, estimator: Arc<dyn MemoryEstimator>) -> Result<Self> {
        config.validate()?;
        Ok(MemoryGuard { config, estimator })
    }

    pub fn process(config: MemoryGuardConfig) -> Result<Self> {
        Self::new(config, Arc::new(ProcessRss))
    }

    pub fn check(&self) -> GuardAction {
        memory_guard_check(self.estimator.resident_bytes(), &self.config)
    }
}

impl std::fmt::Debug for MemoryGuard {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MemoryGuard")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}
