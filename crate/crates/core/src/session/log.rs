//! Session logs: JSON lines with a header, one record per transaction and a
//! trailer. A log without its trailer is treated as truncated.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::SessionConfig;
use crate::chain::{TxHash, TxRequest};
use crate::lifecycle::{SoakStats, Stage};
use crate::snapshot::Snapshot;

pub const LOG_FORMAT: &str = "txforge-log/1";
pub const LOG_FILE: &str = "session.log.jsonl";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("cannot access log: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt log at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("log format `{found}` is not supported (expected {LOG_FORMAT})")]
    Version { found: String },
}

/// Everything needed to re-run and re-judge one transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedTx {
    pub repetition: u32,
    /// Soak tick at which the transaction was sent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<u64>,
    pub tx_hash: TxHash,
    pub tx: TxRequest,
    pub lifecycle: Vec<Stage>,
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line {
    Header { format: String, config: Box<SessionConfig> },
    Tx(Box<LoggedTx>),
    Trailer { transactions: usize, soak: Option<SoakStats> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionLog {
    pub config: SessionConfig,
    pub entries: Vec<LoggedTx>,
    pub soak: Option<SoakStats>,
}

impl SessionLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("log line serializes"));
            out.push('\n');
        };
        push(&Line::Header { format: LOG_FORMAT.into(), config: Box::new(self.config.clone()) });
        for e in &self.entries {
            push(&Line::Tx(Box::new(e.clone())));
        }
        push(&Line::Trailer { transactions: self.entries.len(), soak: self.soak.clone() });
        out
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let corrupt = |line: usize, reason: String| LogError::Corrupt { line, reason };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());

        let (n, first) = lines.next().ok_or_else(|| corrupt(1, "empty log".into()))?;
        let raw: serde_json::Value = serde_json::from_str(first).map_err(|e| corrupt(n, e.to_string()))?;
        let found = raw.get("format").and_then(|f| f.as_str()).unwrap_or("").to_string();
        if raw.get("record").and_then(|r| r.as_str()) != Some("header") {
            return Err(corrupt(n, "first line is not a header".into()));
        }
        if found != LOG_FORMAT {
            return Err(LogError::Version { found });
        }
        let Line::Header { config, .. } = serde_json::from_value(raw).map_err(|e| corrupt(n, e.to_string()))? else {
            unreachable!("record tag checked above");
        };

        let mut entries = Vec::new();
        for (n, text) in lines {
            match serde_json::from_str::<Line>(text).map_err(|e| corrupt(n, e.to_string()))? {
                Line::Tx(e) => entries.push(*e),
                Line::Trailer { transactions, soak } => {
                    if transactions != entries.len() {
                        return Err(corrupt(
                            n,
                            format!("trailer counts {transactions} transactions, found {}", entries.len()),
                        ));
                    }
                    return Ok(SessionLog { config: *config, entries, soak });
                }
                Line::Header { .. } => return Err(corrupt(n, "second header".into())),
            }
        }
        Err(corrupt(text.lines().count(), "missing trailer (truncated log)".into()))
    }

    pub fn write(&self, path: &Path) -> Result<(), LogError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, LogError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
