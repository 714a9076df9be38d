use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use txforge_core::session::{SessionConfig, SessionReport, LOG_FILE, REPORT_FILE, SUMMARY_FILE};

fn txforge(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_txforge"));
    cmd.args(args).env_remove("TXFORGE_SEED");
    if let Some(s) = seed_env {
        cmd.env("TXFORGE_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const TYPE1: &str = "txs = 4\nwait = { ticks = 3 }\n[dapp]\npreset = \"type1\"\n";
const PASSIVE: &str = "txs = 4\n[dapp]\npreset = \"passive\"\n";

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(dir: &Path) -> SessionReport {
    SessionReport::from_json(&std::fs::read_to_string(dir.join(REPORT_FILE)).unwrap()).unwrap()
}

#[test]
fn run_with_violations_exits_2_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.toml", TYPE1);
    let out = tmp.path().join("out");
    let o = txforge(&["run", "--config", s(&cfg), "--out", s(&out)], None);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [REPORT_FILE, SUMMARY_FILE, LOG_FILE] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(report(&out).counts.assertion1_violations, 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("type_i"));
}

#[test]
fn clean_run_exits_0() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.toml", PASSIVE);
    let out = tmp.path().join("out");
    let o = txforge(&["run", "--config", s(&cfg), "--out", s(&out)], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn replay_and_report_reproduce_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.toml", TYPE1);
    let out = tmp.path().join("out");
    txforge(&["run", "--config", s(&cfg), "--out", s(&out)], None);
    let again = tmp.path().join("again");
    let o = txforge(&["replay", "--log", s(&out.join(LOG_FILE)), "--out", s(&again)], None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read(out.join(REPORT_FILE)).unwrap(), std::fs::read(again.join(REPORT_FILE)).unwrap());

    let summary = std::fs::read_to_string(out.join(SUMMARY_FILE)).unwrap();
    std::fs::remove_file(out.join(SUMMARY_FILE)).unwrap();
    let o = txforge(&["report", "--in", s(&out)], None);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stdout), summary);
    assert_eq!(std::fs::read_to_string(out.join(SUMMARY_FILE)).unwrap(), summary);
}

#[test]
fn truncated_log_is_an_operational_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "t.toml", TYPE1);
    let out = tmp.path().join("out");
    txforge(&["run", "--config", s(&cfg), "--out", s(&out)], None);
    let log = std::fs::read_to_string(out.join(LOG_FILE)).unwrap();
    let cut = write_config(tmp.path(), "cut.jsonl", &log[..log.len() / 2]);
    let o = txforge(&["replay", "--log", s(&cut)], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupt"));
}

#[test]
fn seed_precedence_flag_then_env_then_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.toml", &format!("seed = 5\n{PASSIVE}"));
    let seed_of = |args: &[&str], env: Option<&str>| {
        let out = tempfile::tempdir().unwrap();
        let mut all = vec!["run", "--config", s(&cfg), "--out", s(out.path())];
        all.extend_from_slice(args);
        assert_eq!(txforge(&all, env).status.code(), Some(0));
        report(out.path()).seed
    };
    assert_eq!(seed_of(&[], None), 5);
    assert_eq!(seed_of(&[], Some("11")), 11);
    assert_eq!(seed_of(&["--seed", "12"], Some("11")), 12);
}

#[test]
fn mode_flag_overrides_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.toml", PASSIVE);
    let out = tmp.path().join("out");
    // Soak needs a stochastic profile this file lacks.
    let o = txforge(&["run", "--config", s(&cfg), "--out", s(&out), "--mode", "soak"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stochastic"));
}

#[test]
fn operational_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", "nonsense = true\n");
    let good = write_config(tmp.path(), "p.toml", PASSIVE);
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--config", s(&bad), "--out", "x"],
        vec!["run", "--config", "/nonexistent.toml", "--out", "x"],
        vec!["run", "--config", s(&good)],
        vec!["run", "--config", s(&good), "--out", "x", "--mode", "bogus"],
        vec!["serve", "--config", s(&good)],
        vec!["report", "--in", "/nonexistent"],
        vec!["frobnicate"],
    ];
    for args in cases {
        assert_eq!(txforge(&args, None).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(txforge(&["--help"], None).status.code(), Some(0));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = SessionConfig::load(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n >= 4);
}
