//! Session orchestration: configuration, running, reporting and replay.

mod config;
mod log;
mod report;
mod runner;

pub use config::{ClockKind, ConfigError, DappSpec, Mode, ServeConfig, SessionConfig, SoakConfig};
pub use log::{LogError, LoggedTx, SessionLog, LOG_FILE, LOG_FORMAT};
pub use report::{Counts, Coverage, SessionReport, TxRecord, VerdictCounts, REPORT_FILE, REPORT_FORMAT, SUMMARY_FILE};
pub use runner::{build_report, probe_sources, replay, run_in_process, SessionError, SessionOutcome, WireSession};
