mod common;

use common::*;
use txforge_core::lifecycle::LifecycleState;
use txforge_core::mock::BugFlags;
use txforge_core::oracle::{BugType, Verdict};
use txforge_core::session::{replay, DappSpec, LogError, Mode, SessionError, SessionLog};
use txforge_core::snapshot::{StateDocument, WaitWindow};

#[test]
fn type1_mock_violates_only_assertion_1() {
    let out = run(&traverse_config("type1", 10, 1));
    let c = &out.report.counts;
    assert_eq!(c.txs_total, 10);
    assert_eq!(c.assertion1_violations, 10);
    assert_eq!(c.assertion2_violations, 0);
    assert!(out.report.groups.iter().all(|g| g.bug_type == BugType::TypeI));
}

#[test]
fn correct_mocks_are_clean() {
    for preset in ["passive", "aggressive", "polling"] {
        let out = run(&traverse_config(preset, 100, 3));
        let c = &out.report.counts;
        assert_eq!((c.txs_total, c.clean), (100, 100), "{preset}: {c:?}");
    }
}

#[test]
fn type2_mocks_violate_assertion_2() {
    for preset in ["type2_no_rollback", "type2_restart"] {
        let out = run(&traverse_config(preset, 30, 5));
        let c = &out.report.counts;
        assert_eq!(c.assertion2_violations, 30, "{preset}");
        assert_eq!(c.assertion1_violations, 0, "{preset}");
    }
}

#[test]
fn counts_are_conserved_and_coverage_reported() {
    let out = run(&traverse_config("type2_no_rollback", 20, 11));
    let c = &out.report.counts;
    assert_eq!(c.assertion1.total(), c.txs_total);
    assert_eq!(c.assertion2.total(), c.txs_total);
    let flagged = out.report.transactions.iter().filter(|t| !t.reports.is_empty()).count();
    assert_eq!(flagged, c.assertion2_violations);
    assert_eq!(out.report.coverage.declared, vec!["create", "update", "withdraw"]);
    assert!(out.report.coverage.ratio > 0.0);
    let grouped: usize = out.report.groups.iter().map(|g| g.count).sum();
    assert_eq!(grouped, c.assertion1_violations + c.assertion2_violations);
}

#[test]
fn lifecycles_never_overlap_in_traverse_mode() {
    let out = run(&traverse_config("aggressive", 15, 2));
    for e in &out.log.entries {
        assert_eq!(e.lifecycle.last().unwrap().state, LifecycleState::Finalized);
    }
    // Each transaction's snapshots are strictly later than the previous
    // transaction's last one.
    let mut last = 0;
    for e in &out.log.entries {
        let first = e.snapshots.first().unwrap().captured_at;
        assert!(first >= last);
        last = e.snapshots.last().unwrap().captured_at;
    }
}

/// Passive waiting that applies the finalized update only after a delay
/// longer than the wait window: the pending flag is still set at the
/// Finalized capture, so Assertion 1 fires on a correct strategy.
#[test]
fn laggy_passive_mock_yields_false_positive() {
    let mut cfg = traverse_config("passive", 5, 4);
    cfg.wait = WaitWindow::Ticks(2);
    cfg.dapp = Some(DappSpec {
        preset: Some("passive".into()),
        bugs: Some(BugFlags { laggy_update: Some(5), ..Default::default() }),
        ..Default::default()
    });
    let out = run(&cfg);
    assert_eq!(out.report.counts.assertion1_violations, 5);
    let t = &out.log.entries[0];
    let pending = &t.snapshots[1].document;
    let finalized = &t.snapshots[5].document;
    assert_eq!(pending, finalized);
    assert_ne!(pending.get("pending"), Some(&StateDocument::List(vec![])));

    // The same lag inside the window is harmless.
    cfg.wait = WaitWindow::Ticks(6);
    assert_eq!(run(&cfg).report.counts.assertion1_violations, 0);
}

/// A rollback bug whose update lands only after the Reversed capture goes
/// unnoticed.
#[test]
fn late_update_hides_missing_rollback() {
    let mut cfg = traverse_config("type2_no_rollback", 5, 6);
    cfg.wait = WaitWindow::Ticks(1);
    cfg.dapp = Some(DappSpec {
        preset: Some("type2_no_rollback".into()),
        bugs: Some(BugFlags { type2_no_rollback: true, laggy_update: Some(6), ..Default::default() }),
        ..Default::default()
    });
    let out = run(&cfg);
    assert_eq!(out.report.counts.assertion2_violations, 0);
    assert_eq!(out.report.counts.assertion1_violations, 0);
    // Without the lag the same mock is caught.
    cfg.dapp.as_mut().unwrap().bugs.as_mut().unwrap().laggy_update = None;
    assert_eq!(run(&cfg).report.counts.assertion2_violations, 5);
}

#[test]
fn identical_config_gives_identical_bytes() {
    for preset in ["type1", "polling"] {
        let cfg = traverse_config(preset, 12, 77);
        assert_eq!(run(&cfg).report.to_json(), run(&cfg).report.to_json());
    }
    let a = run(&traverse_config("aggressive", 12, 1)).report.to_json();
    let b = run(&traverse_config("aggressive", 12, 2)).report.to_json();
    assert_ne!(a, b);
}

#[test]
fn replay_reproduces_report() {
    let out = run(&traverse_config("type2_restart", 8, 9));
    let log = SessionLog::parse(&out.log.to_jsonl()).unwrap();
    assert_eq!(replay(&log).unwrap().to_json(), out.report.to_json());
}

#[test]
fn replay_with_edited_snapshot_changes_verdict() {
    let out = run(&traverse_config("aggressive", 3, 9));
    let mut log = out.log.clone();
    // Make the Reversed capture of the first transaction differ from Pending.
    let snap = log.entries[0].snapshots.iter_mut().find(|s| s.stage.state == LifecycleState::Reversed).unwrap();
    snap.document = StateDocument::parse(r#"{"tampered":true}"#).unwrap();
    let report = replay(&log).unwrap();
    assert!(matches!(report.transactions[0].assertion_2, Verdict::Violation { .. }));
    assert_eq!(report.counts.assertion2_violations, 1);
}

#[test]
fn replay_rejects_bad_logs() {
    let out = run(&traverse_config("passive", 2, 1));
    let text = out.log.to_jsonl();
    let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    assert!(matches!(SessionLog::parse(&truncated), Err(LogError::Corrupt { .. })));
    let mut log = out.log.clone();
    log.entries[1].tx.nonce = 5;
    assert!(matches!(replay(&log), Err(SessionError::Diverged(_))));
}

#[test]
fn soak_session_runs_and_replays() {
    let mut cfg = traverse_config("aggressive", 0, 21);
    cfg.mode = Mode::Soak;
    cfg.stochastic = Some(Default::default());
    cfg.soak.ticks = 400;
    cfg.soak.submit_probability = 0.3;
    let out = run(&cfg);
    let stats = out.report.soak.clone().unwrap();
    assert_eq!(stats.ticks, 400);
    assert!(stats.reorgs > 0);
    assert!(out.report.counts.txs_total > 50);
    assert_eq!(replay(&out.log).unwrap().to_json(), out.report.to_json());
}

#[test]
fn strict_mode_is_opt_in() {
    let mut cfg = traverse_config("aggressive", 4, 1);
    cfg.strict_assertion2 = true;
    assert_eq!(run(&cfg).report.counts.clean, 4);
}
