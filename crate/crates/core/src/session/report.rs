use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Mode;
use crate::chain::TxHash;
use crate::lifecycle::SoakStats;
use crate::oracle::{group_reports, BugReport, IssueGroup, TxAnalysis, Verdict, UNTAGGED};

pub const REPORT_FORMAT: &str = "txforge-report/1";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TxRecord {
    pub repetition: u32,
    pub tx_hash: TxHash,
    pub tag: Option<String>,
    /// Stages the transaction went through, e.g. `executed#2`.
    pub lifecycle: Vec<String>,
    pub stages_captured: Vec<String>,
    pub complete: bool,
    pub abort_reason: Option<String>,
    pub assertion_1: Verdict,
    pub assertion_2: Verdict,
    pub group_ids: Vec<String>,
    pub reports: Vec<BugReport>,
}

impl TxRecord {
    pub fn new(
        repetition: u32,
        analysis: TxAnalysis,
        lifecycle: Vec<String>,
        stages_captured: Vec<String>,
        abort_reason: Option<String>,
    ) -> Self {
        let tag = analysis.tag.clone();
        let group_ids = analysis
            .reports
            .iter()
            .map(|r| format!("{}/{}", tag.as_deref().unwrap_or(UNTAGGED), r.bug_type.as_str()))
            .collect();
        TxRecord {
            repetition,
            tx_hash: analysis.tx_hash,
            tag,
            lifecycle,
            stages_captured,
            complete: analysis.complete,
            abort_reason,
            assertion_1: analysis.assertion_1,
            assertion_2: analysis.assertion_2,
            group_ids,
            reports: analysis.reports,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub pass: usize,
    pub violation: usize,
    pub inconclusive: usize,
}

impl VerdictCounts {
    fn add(&mut self, v: &Verdict) {
        match v {
            Verdict::Pass => self.pass += 1,
            Verdict::Violation { .. } => self.violation += 1,
            Verdict::Inconclusive { .. } => self.inconclusive += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.pass + self.violation + self.inconclusive
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub txs_total: usize,
    pub assertion1_violations: usize,
    pub assertion2_violations: usize,
    /// Transactions with at least one inconclusive verdict.
    pub inconclusive: usize,
    /// Transactions where both assertions passed.
    pub clean: usize,
    pub assertion1: VerdictCounts,
    pub assertion2: VerdictCounts,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub declared: Vec<String>,
    pub exercised: Vec<String>,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub format: String,
    pub mode: Mode,
    pub seed: u64,
    pub dapp: Option<String>,
    pub counts: Counts,
    pub coverage: Coverage,
    pub groups: Vec<IssueGroup>,
    pub transactions: Vec<TxRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soak: Option<SoakStats>,
}

impl SessionReport {
    pub fn build(
        mode: Mode,
        seed: u64,
        dapp: Option<String>,
        declared_tags: Vec<String>,
        transactions: Vec<TxRecord>,
        soak: Option<SoakStats>,
    ) -> Self {
        let mut counts = Counts { txs_total: transactions.len(), ..Default::default() };
        for t in &transactions {
            counts.assertion1.add(&t.assertion_1);
            counts.assertion2.add(&t.assertion_2);
            if t.assertion_1.is_inconclusive() || t.assertion_2.is_inconclusive() {
                counts.inconclusive += 1;
            }
            if t.assertion_1 == Verdict::Pass && t.assertion_2 == Verdict::Pass {
                counts.clean += 1;
            }
        }
        counts.assertion1_violations = counts.assertion1.violation;
        counts.assertion2_violations = counts.assertion2.violation;

        let exercised: BTreeSet<String> = transactions.iter().filter_map(|t| t.tag.clone()).collect();
        let declared: BTreeSet<String> = declared_tags.into_iter().collect();
        let hit = declared.iter().filter(|t| exercised.contains(*t)).count();
        let ratio = if declared.is_empty() { 0.0 } else { hit as f64 / declared.len() as f64 };

        let all_reports: Vec<BugReport> = transactions.iter().flat_map(|t| t.reports.iter().cloned()).collect();
        SessionReport {
            format: REPORT_FORMAT.to_string(),
            mode,
            seed,
            dapp,
            counts,
            coverage: Coverage {
                declared: declared.into_iter().collect(),
                exercised: exercised.into_iter().collect(),
                ratio,
            },
            groups: group_reports(&all_reports),
            transactions,
            soak,
        }
    }

    pub fn has_violations(&self) -> bool {
        self.counts.assertion1_violations + self.counts.assertion2_violations > 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let r: SessionReport = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if r.format != REPORT_FORMAT {
            return Err(format!("unsupported report format `{}`", r.format));
        }
        Ok(r)
    }

    /// Human-readable table of counts per DApp, tag and bug type.
    pub fn summary(&self) -> String {
        let dapp = self.dapp.as_deref().unwrap_or("(wire)");
        let c = &self.counts;
        let mut out = String::new();
        let _ = writeln!(out, "txforge session: mode={} seed={} dapp={dapp}", self.mode, self.seed);
        let _ = writeln!(
            out,
            "transactions {}  clean {}  A1 violations {}  A2 violations {}  inconclusive {}",
            c.txs_total, c.clean, c.assertion1_violations, c.assertion2_violations, c.inconclusive
        );
        let _ = writeln!(
            out,
            "coverage {}/{} tags ({:.0}%)",
            self.coverage.exercised.iter().filter(|t| self.coverage.declared.contains(t)).count(),
            self.coverage.declared.len(),
            self.coverage.ratio * 100.0
        );
        if let Some(s) = &self.soak {
            let _ = writeln!(
                out,
                "soak: ticks {} blocks {} reorgs {} reversed {} dropped {} finalized {}",
                s.ticks, s.blocks_mined, s.reorgs, s.reversed, s.dropped, s.finalized
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<16} {:<16} {:<8} {:>6}", "dapp", "tag", "type", "count");
        if self.groups.is_empty() {
            let _ = writeln!(out, "(no issues)");
        }
        for g in &self.groups {
            let _ = writeln!(out, "{:<16} {:<16} {:<8} {:>6}", dapp, g.tag, g.bug_type.to_string(), g.count);
        }
        for g in &self.groups {
            let _ = writeln!(out, "\n[{}] {}", g.id, g.representative.narrative);
        }
        out
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(REPORT_FILE), self.to_json())?;
        std::fs::write(dir.join(SUMMARY_FILE), self.summary())
    }
}
