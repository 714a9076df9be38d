//! Off-chain state capture, filtering and comparison.

mod collector;
mod diff;
mod document;
mod rules;
mod source;

pub use collector::{
    snapshot_diff, snapshot_equal, ClockWaiter, Collector, Snapshot, WaitWindow, Waiter, DEFAULT_WAIT_TICKS,
};
pub use diff::{Change, DiffError, DocumentDiff};
pub use document::{render_path, Decimal, PathSeg, StateDocument};
pub use rules::{FieldRule, FieldRuleSet, RuleAction};
pub use source::{CaptureError, FileSource, HttpSource, InProcessSource, SourceSpec, StateSource};
