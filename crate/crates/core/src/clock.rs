use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// Shared logical tick counter. Blocks are stamped from it and, in simulated
/// sessions, wait windows advance it.
#[derive(Clone, Debug, Default)]
pub struct LogicalClock(Arc<AtomicU64>);

impl LogicalClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }

    /// Advances by one tick and returns the new time.
    pub fn tick(&self) -> u64 {
        self.0.fetch_add(1, Ordering::SeqCst) + 1
    }

    pub fn advance(&self, ticks: u64) -> u64 {
        self.0.fetch_add(ticks, Ordering::SeqCst) + ticks
    }
}
