//! One line per acceptance criterion. Exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use txforge_core::lifecycle::{StochasticProfile, MEAN_BLOCKS_BETWEEN_REORGS};
use txforge_core::mock::BugFlags;
use txforge_core::oracle::analyze_with;
use txforge_core::session::{DappSpec, Mode};
use txforge_core::snapshot::WaitWindow;

const TRUTH_TABLE_BUDGET: Duration = Duration::from_secs(1);
const MATRIX_BUDGET: Duration = Duration::from_secs(30);
const MATRIX_TXS: usize = 100;
const NEUTRALITY_CASES: u32 = 1000;
const EVENT_CASES: u32 = 500;
const SOAK_TICKS: u64 = 50_000;
const SOAK_SEED: u64 = 2024;
/// Submissions do not influence reorg draws; a low rate keeps the run short.
const SOAK_SUBMIT_PROBABILITY: f64 = 0.01;
const CALIBRATION_TOLERANCE: f64 = 0.10;
const CALIBRATION_BUDGET: Duration = Duration::from_secs(10);

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn truth_table() -> Outcome {
    let started = Instant::now();
    let mut mismatches = 0;
    let mut total = 0;
    for n in 0..3u32.pow(6) {
        let digit = |i: u32| (n / 3u32.pow(i) % 3) as u8;
        let v: [u8; 6] = std::array::from_fn(|i| digit(i as u32));
        let a = analyze_with(&abstract_trace(v.map(Some)), false);
        let ok1 = !a.assertion_1.is_violation() && !a.assertion_1.is_inconclusive();
        let ok2 = !a.assertion_2.is_violation() && !a.assertion_2.is_inconclusive();
        if ok1 != brute_a1(v[0], v[1], v[5]) || ok2 != brute_a2(v[1], v[3]) {
            mismatches += 1;
        }
        total += 1;
    }
    let took = started.elapsed();
    check(mismatches == 0 && took < TRUTH_TABLE_BUDGET, format!("{total} cases, {mismatches} mismatches, {took:.2?}"))
}

fn detection_matrix() -> Outcome {
    let started = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    // (preset, expected A1 violations, expected A2 violations)
    let matrix = [
        ("type1", MATRIX_TXS, 0),
        ("type2_no_rollback", 0, MATRIX_TXS),
        ("type2_restart", 0, MATRIX_TXS),
        ("passive", 0, 0),
        ("aggressive", 0, 0),
        ("polling", 0, 0),
    ];
    for (i, (preset, a1, a2)) in matrix.into_iter().enumerate() {
        let out = run(&traverse_config(preset, MATRIX_TXS, 100 + i as u64));
        let c = &out.report.counts;
        let row_ok = c.txs_total == MATRIX_TXS
            && c.assertion1_violations == a1
            && c.assertion2_violations == a2
            && c.inconclusive == 0;
        ok &= row_ok;
        lines.push(format!("{preset} A1={} A2={}", c.assertion1_violations, c.assertion2_violations));
    }
    let took = started.elapsed();
    check(ok && took < MATRIX_BUDGET, format!("{} ({took:.2?})", lines.join(", ")))
}

fn fp_fn_mechanisms() -> Outcome {
    let laggy = |preset: &str, bugs: BugFlags, wait: u64| {
        let mut cfg = traverse_config(preset, 10, 31);
        cfg.wait = WaitWindow::Ticks(wait);
        cfg.dapp = Some(DappSpec { preset: Some(preset.into()), bugs: Some(bugs), ..Default::default() });
        run(&cfg).report.counts
    };
    // A correct passive DApp whose finalized update lands after the capture.
    let fp = laggy("passive", BugFlags { laggy_update: Some(5), ..Default::default() }, 2);
    // A DApp without rollback whose update lands after the Reversed capture.
    let missed = BugFlags { type2_no_rollback: true, laggy_update: Some(6), ..Default::default() };
    let fn_ = laggy("type2_no_rollback", missed.clone(), 1);
    let caught = laggy("type2_no_rollback", BugFlags { laggy_update: None, ..missed }, 1);
    check(
        fp.assertion1_violations == 10 && fn_.assertion2_violations == 0 && caught.assertion2_violations == 10,
        format!(
            "false positive A1={}/10, missed update A2={}/10, same bug without lag A2={}/10",
            fp.assertion1_violations, fn_.assertion2_violations, caught.assertion2_violations
        ),
    )
}

fn run_property<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn reversal_neutrality() -> Outcome {
    match run_property(NEUTRALITY_CASES, neutrality_input(), neutrality_case) {
        Ok(()) => Ok(format!("{NEUTRALITY_CASES} random sequences match the re-fold")),
        Err(e) => Err(e),
    }
}

fn event_contract() -> Outcome {
    let walks = run_property(EVENT_CASES, (walk(), 1u64..8), |(w, k)| event_contract_case(w, k));
    let dropped = run_property(50, Just(()), |_| {
        event_contract_case(
            vec![
                txforge_core::lifecycle::LifecycleState::Created,
                txforge_core::lifecycle::LifecycleState::Pending,
                txforge_core::lifecycle::LifecycleState::Dropped,
            ],
            6,
        )
    });
    match (walks, dropped) {
        (Ok(()), Ok(())) => Ok(format!("{EVENT_CASES} random walks, dropped-from-pending emits one event")),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

fn stochastic_calibration() -> Outcome {
    let expected = SOAK_TICKS as f64 / MEAN_BLOCKS_BETWEEN_REORGS;
    let mut cfg = traverse_config("aggressive", 0, SOAK_SEED);
    cfg.mode = Mode::Soak;
    cfg.stochastic = Some(StochasticProfile::default());
    cfg.soak.ticks = SOAK_TICKS;
    cfg.soak.submit_probability = SOAK_SUBMIT_PROBABILITY;
    let started = Instant::now();
    let out = run(&cfg);
    let took = started.elapsed();
    let reorgs = out.report.soak.map(|s| s.reorgs).unwrap_or(0) as f64;
    let rel = (reorgs - expected).abs() / expected;
    check(
        rel <= CALIBRATION_TOLERANCE && took < CALIBRATION_BUDGET,
        format!(
            "{reorgs} reorgs over {SOAK_TICKS} ticks, expected {expected:.0} (off by {:.1}%), {took:.2?}",
            rel * 100.0
        ),
    )
}

fn determinism() -> Outcome {
    let mut same = 0;
    let presets = ["passive", "aggressive", "polling", "type1", "type2_no_rollback", "type2_restart"];
    for (i, p) in presets.iter().enumerate() {
        let cfg = traverse_config(p, 20, 7 + i as u64);
        if run(&cfg).report.to_json() == run(&cfg).report.to_json() {
            same += 1;
        }
    }
    check(same == presets.len(), format!("{same}/{} configs byte-identical across two runs", presets.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("oracle truth table", truth_table),
        ("detection matrix", detection_matrix),
        ("false positive / negative mechanisms", fp_fn_mechanisms),
        ("reversal neutrality", reversal_neutrality),
        ("event contract", event_contract),
        ("stochastic calibration", stochastic_calibration),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
