use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::diff::DocumentDiff;
use super::document::StateDocument;
use super::rules::FieldRuleSet;
use super::source::{CaptureError, StateSource};
use crate::chain::TxHash;
use crate::clock::LogicalClock;
use crate::lifecycle::Stage;

pub const DEFAULT_WAIT_TICKS: u64 = 15;

/// Pause between a stage settling and its capture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitWindow {
    /// Simulated seconds on the logical clock.
    Ticks(u64),
    /// Real time, for DApps attached over the wire.
    WallMs(u64),
}

impl Default for WaitWindow {
    fn default() -> Self {
        WaitWindow::Ticks(DEFAULT_WAIT_TICKS)
    }
}

impl WaitWindow {
    pub fn ticks(self) -> u64 {
        match self {
            WaitWindow::Ticks(t) => t,
            WaitWindow::WallMs(_) => 0,
        }
    }

    pub fn wall(self) -> Duration {
        match self {
            WaitWindow::Ticks(_) => Duration::ZERO,
            WaitWindow::WallMs(ms) => Duration::from_millis(ms),
        }
    }
}

/// Lets time pass before a capture; returns the capture timestamp.
pub trait Waiter {
    fn wait(&mut self, window: WaitWindow) -> u64;
}

/// Advances the logical clock and, for wall windows, sleeps.
pub struct ClockWaiter(pub LogicalClock);

impl Waiter for ClockWaiter {
    fn wait(&mut self, window: WaitWindow) -> u64 {
        std::thread::sleep(window.wall());
        self.0.advance(window.ticks())
    }
}

/// σ(t, s): the filtered off-chain state seen at one stage of one transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tx_hash: TxHash,
    pub stage: Stage,
    pub captured_at: u64,
    pub source_id: String,
    pub rules_fingerprint: String,
    pub document: StateDocument,
}

/// Structural equality of the documents; everything else is ignored.
pub fn snapshot_equal(a: &Snapshot, b: &Snapshot) -> Result<bool, CaptureError> {
    comparable(a, b)?;
    Ok(a.document == b.document)
}

pub fn snapshot_diff(a: &Snapshot, b: &Snapshot) -> Result<DocumentDiff, CaptureError> {
    comparable(a, b)?;
    Ok(DocumentDiff::between(&a.document, &b.document))
}

fn comparable(a: &Snapshot, b: &Snapshot) -> Result<(), CaptureError> {
    if a.rules_fingerprint != b.rules_fingerprint {
        return Err(CaptureError::Incomparable(a.rules_fingerprint.clone(), b.rules_fingerprint.clone()));
    }
    Ok(())
}

/// Fetches, filters and stores snapshots from one or more sources.
///
/// With several sources the document is a map from source id to that
/// source's filtered document.
pub struct Collector {
    sources: Vec<Box<dyn StateSource>>,
    rules: FieldRuleSet,
    fingerprint: String,
    store: Vec<Snapshot>,
}

impl Collector {
    pub fn new(sources: Vec<Box<dyn StateSource>>, rules: FieldRuleSet) -> Self {
        let fingerprint = rules.fingerprint();
        Collector { sources, rules, fingerprint, store: Vec::new() }
    }

    pub fn rules(&self) -> &FieldRuleSet {
        &self.rules
    }

    pub fn source_id(&self) -> String {
        self.sources.iter().map(|s| s.id()).collect::<Vec<_>>().join("+")
    }

    /// Fetches every source now, without storing anything.
    pub fn fetch(&mut self) -> Result<StateDocument, CaptureError> {
        if let [only] = self.sources.as_mut_slice() {
            return Ok(self.rules.apply(&only.fetch()?));
        }
        let mut composite = BTreeMap::new();
        for src in &mut self.sources {
            let doc = self.rules.apply(&src.fetch()?);
            composite.insert(src.id().to_string(), doc);
        }
        Ok(StateDocument::Map(composite))
    }

    /// Waits out `window`, then captures and stores σ(tx, stage).
    pub fn capture(
        &mut self,
        tx_hash: TxHash,
        stage: Stage,
        window: WaitWindow,
        waiter: &mut dyn Waiter,
    ) -> Result<Snapshot, CaptureError> {
        let captured_at = waiter.wait(window);
        self.capture_at(tx_hash, stage, captured_at)
    }

    /// Captures immediately, for callers that handle the wait themselves.
    pub fn capture_at(&mut self, tx_hash: TxHash, stage: Stage, captured_at: u64) -> Result<Snapshot, CaptureError> {
        let document = self.fetch()?;
        let snap = Snapshot {
            tx_hash,
            stage,
            captured_at,
            source_id: self.source_id(),
            rules_fingerprint: self.fingerprint.clone(),
            document,
        };
        self.store.push(snap.clone());
        Ok(snap)
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.store
    }

    pub fn snapshots_for(&self, tx: &TxHash) -> impl Iterator<Item = &Snapshot> {
        let tx = *tx;
        self.store.iter().filter(move |s| s.tx_hash == tx)
    }
}
