//! Consistency checks over the snapshots of one transaction.
//!
//! Assertion 1: if the state at Created differs from the state at Finalized,
//! the state at the first Pending visit must differ from Finalized too.
//! Assertion 2: the state at the first Pending visit equals the state at the
//! first Reversed visit.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chain::TxHash;
use crate::lifecycle::{LifecycleState, Stage};
use crate::snapshot::{snapshot_diff, snapshot_equal, DocumentDiff, Snapshot};

use LifecycleState::*;

pub const UNTAGGED: &str = "untagged";

const CREATED: Stage = Stage::first(Created);
const PENDING: Stage = Stage::first(Pending);
const REVERSED: Stage = Stage::first(Reversed);
const FINALIZED: Stage = Stage::first(Finalized);

/// Snapshots of one transaction, one per stage visit.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionSnapshotTrace {
    pub tx_hash: TxHash,
    pub tag: Option<String>,
    #[serde(serialize_with = "ser_snapshots", deserialize_with = "de_snapshots")]
    pub snapshots: BTreeMap<Stage, Snapshot>,
    /// The lifecycle ran to a terminal state and every stage it visited was
    /// captured. A stage missing from a complete trace was never visited.
    pub complete: bool,
}

fn ser_snapshots<S: Serializer>(map: &BTreeMap<Stage, Snapshot>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(map.values())
}

fn de_snapshots<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Stage, Snapshot>, D::Error> {
    Ok(Vec::<Snapshot>::deserialize(d)?.into_iter().map(|s| (s.stage, s)).collect())
}

impl TransactionSnapshotTrace {
    pub fn new(tx_hash: TxHash, tag: Option<String>) -> Self {
        TransactionSnapshotTrace { tx_hash, tag, snapshots: BTreeMap::new(), complete: false }
    }

    pub fn insert(&mut self, snap: Snapshot) {
        self.snapshots.insert(snap.stage, snap);
    }

    pub fn get(&self, stage: Stage) -> Option<&Snapshot> {
        self.snapshots.get(&stage)
    }

    pub fn tag_or_default(&self) -> &str {
        self.tag.as_deref().unwrap_or(UNTAGGED)
    }
}

/// Two stages whose snapshots witness a violation, and how they differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub from: Stage,
    pub to: Stage,
    pub diff: DocumentDiff,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Violation { evidence: Evidence },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Verdict::Violation { .. })
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Verdict::Inconclusive { .. })
    }

    fn inconclusive(reason: impl Into<String>) -> Self {
        Verdict::Inconclusive { reason: reason.into() }
    }
}

fn require(trace: &TransactionSnapshotTrace, stage: Stage) -> Result<&Snapshot, Verdict> {
    trace.get(stage).ok_or_else(|| Verdict::inconclusive(format!("no snapshot at {stage}")))
}

fn eq(a: &Snapshot, b: &Snapshot) -> Result<bool, Verdict> {
    snapshot_equal(a, b).map_err(|e| Verdict::inconclusive(e.to_string()))
}

fn evidence(a: &Snapshot, b: &Snapshot) -> Evidence {
    Evidence { from: a.stage, to: b.stage, diff: snapshot_diff(a, b).unwrap_or_default() }
}

/// An assertion about a stage the transaction never reached holds vacuously.
fn never_visited(trace: &TransactionSnapshotTrace, stage: Stage) -> bool {
    trace.complete && trace.get(stage).is_none()
}

pub fn check_assertion_1(trace: &TransactionSnapshotTrace) -> Verdict {
    let run = || -> Result<Verdict, Verdict> {
        if never_visited(trace, FINALIZED) {
            return Ok(Verdict::Pass);
        }
        let created = require(trace, CREATED)?;
        let pending = require(trace, PENDING)?;
        let finalized = require(trace, FINALIZED)?;
        if eq(created, finalized)? {
            return Ok(Verdict::Pass);
        }
        if eq(pending, finalized)? {
            // The diff that matters is the update already visible at Pending.
            return Ok(Verdict::Violation { evidence: evidence(created, pending) });
        }
        Ok(Verdict::Pass)
    };
    run().unwrap_or_else(|v| v)
}

/// With `strict`, every pool visit (Pending or Reversed, any index) must
/// match the first Pending visit.
pub fn check_assertion_2(trace: &TransactionSnapshotTrace, strict: bool) -> Verdict {
    let run = || -> Result<Verdict, Verdict> {
        if never_visited(trace, REVERSED) {
            return Ok(Verdict::Pass);
        }
        let pending = require(trace, PENDING)?;
        let reversed = require(trace, REVERSED)?;
        if !eq(pending, reversed)? {
            return Ok(Verdict::Violation { evidence: evidence(pending, reversed) });
        }
        if strict {
            for snap in trace.snapshots.values().filter(|s| matches!(s.stage.state, Pending | Reversed)) {
                if !eq(pending, snap)? {
                    return Ok(Verdict::Violation { evidence: evidence(pending, snap) });
                }
            }
        }
        Ok(Verdict::Pass)
    };
    run().unwrap_or_else(|v| v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BugType {
    #[serde(rename = "type_i")]
    TypeI,
    #[serde(rename = "type_ii")]
    TypeII,
}

impl BugType {
    pub fn assertion(self) -> u8 {
        match self {
            BugType::TypeI => 1,
            BugType::TypeII => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BugType::TypeI => "type_i",
            BugType::TypeII => "type_ii",
        }
    }
}

impl fmt::Display for BugType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BugType::TypeI => "Type-I",
            BugType::TypeII => "Type-II",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub bug_type: BugType,
    pub tx_hash: TxHash,
    pub tag: Option<String>,
    pub violated_assertion: u8,
    pub evidence: Evidence,
    pub narrative: String,
}

impl BugReport {
    fn new(bug_type: BugType, trace: &TransactionSnapshotTrace, evidence: Evidence) -> Self {
        let what = match bug_type {
            BugType::TypeI => format!(
                "Off-chain state already matched the finalized outcome while the transaction was pending \
                 ({}). Had the transaction been dropped from the pool, the DApp would be left showing an \
                 update that never happened on chain.",
                evidence.diff
            ),
            BugType::TypeII => format!(
                "Off-chain state changed between {} and {} ({}). The update made when the transaction \
                 executed was not rolled back after its block was orphaned.",
                evidence.from, evidence.to, evidence.diff
            ),
        };
        BugReport {
            bug_type,
            tx_hash: trace.tx_hash,
            tag: trace.tag.clone(),
            violated_assertion: bug_type.assertion(),
            narrative: format!("{bug_type} in `{}` transaction {}: {what}", trace.tag_or_default(), trace.tx_hash),
            evidence,
        }
    }
}

/// Verdicts and reports for one transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxAnalysis {
    pub tx_hash: TxHash,
    pub tag: Option<String>,
    pub complete: bool,
    pub assertion_1: Verdict,
    pub assertion_2: Verdict,
    pub reports: Vec<BugReport>,
}

pub fn analyze_with(trace: &TransactionSnapshotTrace, strict_assertion_2: bool) -> TxAnalysis {
    let a1 = check_assertion_1(trace);
    let a2 = check_assertion_2(trace, strict_assertion_2);
    let mut reports = Vec::new();
    if let Verdict::Violation { evidence } = &a1 {
        reports.push(BugReport::new(BugType::TypeI, trace, evidence.clone()));
    }
    if let Verdict::Violation { evidence } = &a2 {
        reports.push(BugReport::new(BugType::TypeII, trace, evidence.clone()));
    }
    TxAnalysis {
        tx_hash: trace.tx_hash,
        tag: trace.tag.clone(),
        complete: trace.complete,
        assertion_1: a1,
        assertion_2: a2,
        reports,
    }
}

/// Both assertions, checked independently.
pub fn analyze(trace: &TransactionSnapshotTrace) -> Vec<BugReport> {
    analyze_with(trace, false).reports
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueGroup {
    pub id: String,
    pub tag: String,
    pub bug_type: BugType,
    pub count: usize,
    pub tx_hashes: Vec<TxHash>,
    pub representative: BugReport,
}

/// One group per (tag, bug type), ordered by tag then type.
pub fn group_reports(reports: &[BugReport]) -> Vec<IssueGroup> {
    let mut groups: BTreeMap<(String, BugType), IssueGroup> = BTreeMap::new();
    for r in reports {
        let tag = r.tag.clone().unwrap_or_else(|| UNTAGGED.to_string());
        groups
            .entry((tag.clone(), r.bug_type))
            .and_modify(|g| {
                g.count += 1;
                g.tx_hashes.push(r.tx_hash);
            })
            .or_insert_with(|| IssueGroup {
                id: format!("{tag}/{}", r.bug_type.as_str()),
                tag,
                bug_type: r.bug_type,
                count: 1,
                tx_hashes: vec![r.tx_hash],
                representative: r.clone(),
            });
    }
    groups.into_values().collect()
}
