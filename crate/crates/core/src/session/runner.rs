//! Drives sessions: in-process traversal and soak, wire traversal, replay.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::config::{ConfigError, Mode, SessionConfig};
use super::log::{LogError, LoggedTx, SessionLog};
use super::report::{SessionReport, TxRecord};
use crate::chain::{Transaction, TxHash};
use crate::clock::LogicalClock;
use crate::lifecycle::{
    run_traversal_shared, Controller, ControllerConfig, HookError, LifecycleState, LifecycleTrace, SoakStats, Stage,
    StageContext, StochasticDriver,
};
use crate::mock::{MockConfig, MockDApp};
use crate::oracle::{analyze_with, TransactionSnapshotTrace};
use crate::snapshot::{
    CaptureError, Collector, FileSource, HttpSource, InProcessSource, SourceSpec, StateSource, WaitWindow,
};

use LifecycleState::*;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("snapshot source unavailable: {0}")]
    Source(#[from] CaptureError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("replay diverged: {0}")]
    Diverged(String),
}

/// A finished session: its report and the log that reproduces it.
#[derive(Clone, Debug)]
pub struct SessionOutcome {
    pub report: SessionReport,
    pub log: SessionLog,
}

fn controller_for(config: &SessionConfig) -> Controller {
    Controller::new(ControllerConfig { confirmations: config.confirmations, ..Default::default() }, LogicalClock::new())
}

fn wire_sources(config: &SessionConfig) -> Vec<Box<dyn StateSource>> {
    config
        .sources
        .iter()
        .filter_map(|s| -> Option<Box<dyn StateSource>> {
            match s {
                SourceSpec::Mock => None,
                SourceSpec::Http { url, timeout_ms } => {
                    Some(Box::new(HttpSource::new(url.clone(), Duration::from_millis(*timeout_ms))))
                }
                SourceSpec::File { path } => Some(Box::new(FileSource::new(path.clone()))),
            }
        })
        .collect()
}

fn mock_collector(config: &SessionConfig, mock: &Arc<Mutex<MockDApp>>) -> Collector {
    let mut sources = Vec::new();
    for spec in &config.sources {
        if matches!(spec, SourceSpec::Mock) {
            let m = mock.clone();
            let id = format!("mock:{}", mock.lock().unwrap().config().name);
            sources
                .push(Box::new(InProcessSource::new(id, move || m.lock().unwrap().document())) as Box<dyn StateSource>);
        }
    }
    sources.extend(wire_sources(config));
    Collector::new(sources, config.rules.clone())
}

/// Brings a transaction whose traversal aborted to a terminal state, so the
/// next traversal starts on a quiet chain.
fn settle_aborted(ctl: &mut Controller, tx: &TxHash) {
    loop {
        let next = match ctl.current_state(tx) {
            Ok(Created) => Pending,
            Ok(Pending | Reversed) => Dropped,
            Ok(Executed) => Finalized,
            _ => return,
        };
        if ctl.advance(tx, next).is_err() {
            return;
        }
    }
}

fn stages(trace: &LifecycleTrace) -> Vec<Stage> {
    trace.steps.iter().map(|s| s.stage()).collect()
}

fn entry_for(
    repetition: u32,
    tick: Option<u64>,
    tx: &Transaction,
    trace: &LifecycleTrace,
    collector: &Collector,
    complete: bool,
) -> LoggedTx {
    LoggedTx {
        repetition,
        tick,
        tx_hash: tx.hash(),
        tx: tx.to_request(),
        lifecycle: stages(trace),
        complete,
        abort_reason: trace.abort_reason.clone(),
        snapshots: collector.snapshots_for(&tx.hash()).cloned().collect(),
    }
}

/// Judges logged transactions. Both live runs and replays end here, which
/// is what makes their reports byte-identical.
pub fn build_report(config: &SessionConfig, entries: &[LoggedTx], soak: Option<SoakStats>) -> SessionReport {
    let records = entries
        .iter()
        .map(|e| {
            let mut trace = TransactionSnapshotTrace::new(e.tx_hash, e.tx.tag.clone());
            for s in &e.snapshots {
                trace.insert(s.clone());
            }
            trace.complete = e.complete;
            let analysis = analyze_with(&trace, config.strict_assertion2);
            TxRecord::new(
                e.repetition,
                analysis,
                e.lifecycle.iter().map(|s| s.to_string()).collect(),
                e.snapshots.iter().map(|s| s.stage.to_string()).collect(),
                e.abort_reason.clone(),
            )
        })
        .collect();
    let dapp = config.mock_config().ok().flatten().map(|m| m.name);
    SessionReport::build(config.mode, config.seed, dapp, config.declared_tags(), records, soak)
}

fn finish(config: &SessionConfig, entries: Vec<LoggedTx>, soak: Option<SoakStats>) -> SessionOutcome {
    let report = build_report(config, &entries, soak.clone());
    SessionOutcome { report, log: SessionLog { config: config.clone(), entries, soak } }
}

/// Runs a session whose DApp lives in this process.
pub fn run_in_process(config: &SessionConfig) -> Result<SessionOutcome, SessionError> {
    config.validate()?;
    let mock_cfg = config
        .mock_config()?
        .ok_or_else(|| ConfigError::Invalid("in-process sessions need a [dapp] section".into()))?;
    match config.mode {
        Mode::Traverse => {
            let mut entries = Vec::new();
            for rep in 0..config.repetitions {
                traverse_repetition(config, &mock_cfg, rep, &mut entries)?;
            }
            Ok(finish(config, entries, None))
        }
        Mode::Soak => soak(config, &mock_cfg),
        Mode::Replay => Err(ConfigError::Invalid("replay runs from a log; use `txforge replay`".into()).into()),
    }
}

/// Lets the mock observe everything up to now, then waits out the window
/// while it keeps observing.
fn settle_mock(mock: &Mutex<MockDApp>, ctl: &Controller, wait: WaitWindow) {
    mock.lock().unwrap().sync(ctl);
    match wait {
        WaitWindow::Ticks(n) => {
            for _ in 0..n {
                ctl.clock().tick();
                mock.lock().unwrap().sync(ctl);
            }
        }
        WaitWindow::WallMs(_) => {
            std::thread::sleep(wait.wall());
            mock.lock().unwrap().sync(ctl);
        }
    }
}

fn traverse_repetition(
    config: &SessionConfig,
    mock_cfg: &MockConfig,
    rep: u32,
    entries: &mut Vec<LoggedTx>,
) -> Result<(), SessionError> {
    let mut ctl = controller_for(config);
    let mock = Arc::new(Mutex::new(MockDApp::new(mock_cfg.clone())));
    mock.lock().unwrap().attach(ctl.bus());
    let mut collector = mock_collector(config, &mock);
    collector.fetch()?;
    let plan = config.plan();
    let mut workload = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(rep as u64));

    for _ in 0..config.txs {
        let tx = mock.lock().unwrap().random_tx(&mut workload);
        let hash = ctl.enqueue(tx.clone()).map_err(|e| SessionError::Diverged(e.to_string()))?;
        let mut hook = |c: &Controller, ctx: &StageContext| -> Result<(), HookError> {
            settle_mock(&mock, c, config.wait);
            collector.capture_at(ctx.tx_hash, ctx.stage, c.clock().now()).map_err(|e| HookError(e.to_string()))?;
            if mock_cfg.restart_after_execute && ctx.stage == Stage::first(Executed) {
                mock.lock().unwrap().restart();
            }
            Ok(())
        };
        let (trace, complete) = match ctl.run_traversal(&hash, &plan, &mut hook) {
            Ok(t) => (t, true),
            Err((_, trace)) => {
                settle_aborted(&mut ctl, &hash);
                (trace.expect("enqueued transactions are tracked"), false)
            }
        };
        entries.push(entry_for(rep, None, &tx, &trace, &collector, complete));
    }
    Ok(())
}

fn soak(config: &SessionConfig, mock_cfg: &MockConfig) -> Result<SessionOutcome, SessionError> {
    let mut profile = config.stochastic.clone().expect("validated");
    profile.rng_seed = config.seed;
    let mut driver = StochasticDriver::new(profile).map_err(ConfigError::Invalid)?;
    let mut ctl = controller_for(config);
    let mock = Arc::new(Mutex::new(MockDApp::new(mock_cfg.clone())));
    mock.lock().unwrap().attach(ctl.bus());
    let mut collector = mock_collector(config, &mock);
    collector.fetch()?;
    let mut workload = ChaCha8Rng::seed_from_u64(config.seed);
    workload.set_stream(1);

    let mut sent: Vec<(u64, Transaction)> = Vec::new();
    for tick in 0..config.soak.ticks {
        if workload.random_bool(config.soak.submit_probability) {
            let tx = mock.lock().unwrap().random_tx(&mut workload);
            let hash = ctl.enqueue(tx.clone()).map_err(|e| SessionError::Diverged(e.to_string()))?;
            mock.lock().unwrap().sync(&ctl);
            collector.capture_at(hash, Stage::first(Created), ctl.clock().now())?;
            let rec = ctl.advance(&hash, Pending).map_err(|e| SessionError::Diverged(e.to_string()))?;
            mock.lock().unwrap().sync(&ctl);
            collector.capture_at(hash, rec.stage(), ctl.clock().now())?;
            sent.push((tick, tx));
        }
        let records = ctl.stochastic_step(&mut driver);
        mock.lock().unwrap().sync(&ctl);
        for r in records {
            collector.capture_at(r.tx_hash, r.stage(), ctl.clock().now())?;
        }
    }

    let entries = sent
        .iter()
        .map(|(tick, tx)| {
            let trace = ctl.trace(&tx.hash()).expect("sent transactions are tracked");
            let complete = trace.current().is_terminal();
            entry_for(0, Some(*tick), tx, trace, &collector, complete)
        })
        .collect();
    Ok(finish(config, entries, Some(driver.stats().clone())))
}

/// Retries every wire source until it answers or the deadline passes.
pub fn probe_sources(sources: &mut [Box<dyn StateSource>], budget: Duration) -> Result<(), CaptureError> {
    let deadline = Instant::now() + budget;
    for src in sources.iter_mut() {
        loop {
            match src.fetch() {
                Ok(_) => break,
                Err(e) if Instant::now() >= deadline => return Err(e),
                Err(_) => std::thread::sleep(Duration::from_millis(50)),
            }
        }
    }
    Ok(())
}

/// A session for a DApp attached over the wire. Its snapshot sources have
/// answered at least once, so a node can start accepting transactions.
pub struct WireSession {
    config: SessionConfig,
    collector: Collector,
}

impl WireSession {
    pub fn connect(config: &SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        if config.in_process() {
            return Err(ConfigError::Invalid("wire sessions take no [dapp] section".into()).into());
        }
        let mut sources = wire_sources(config);
        if sources.is_empty() {
            return Err(ConfigError::Invalid("wire sessions need an http or file source".into()).into());
        }
        probe_sources(&mut sources, Duration::from_millis(config.serve.source_probe_ms))?;
        Ok(WireSession { config: config.clone(), collector: Collector::new(sources, config.rules.clone()) })
    }

    /// A fresh controller configured for this session.
    pub fn controller(&self) -> Controller {
        controller_for(&self.config)
    }

    /// Traverses queued transactions one at a time until `stop` is set,
    /// `max_txs` is reached or the session idles out.
    pub fn run(
        mut self,
        controller: Arc<Mutex<Controller>>,
        stop: &AtomicBool,
    ) -> Result<SessionOutcome, SessionError> {
        let config = &self.config;
        let collector = &mut self.collector;
        let plan = config.plan();
        let mut entries = Vec::new();
        let mut last_activity = Instant::now();

        loop {
            if stop.load(Ordering::Relaxed) || config.serve.max_txs.is_some_and(|m| entries.len() >= m) {
                break;
            }
            let next = controller.lock().unwrap().queued().next();
            let Some(hash) = next else {
                if config.serve.idle_timeout_ms.is_some_and(|ms| last_activity.elapsed() >= Duration::from_millis(ms)) {
                    break;
                }
                std::thread::sleep(Duration::from_millis(10));
                continue;
            };
            let tx = controller.lock().unwrap().transaction(&hash).cloned().expect("queued transactions are known");
            let clock = controller.lock().unwrap().clock().clone();
            let mut hook = |ctx: &StageContext| -> Result<(), HookError> {
                std::thread::sleep(config.wait.wall());
                collector.capture_at(ctx.tx_hash, ctx.stage, clock.now()).map_err(|e| HookError(e.to_string()))?;
                Ok(())
            };
            let result = run_traversal_shared(&controller, &hash, &plan, &mut hook);
            let mut ctl = controller.lock().unwrap();
            let complete = result.is_ok();
            if !complete {
                settle_aborted(&mut ctl, &hash);
            }
            let trace = ctl.trace(&hash).cloned().expect("traversed transactions are tracked");
            entries.push(entry_for(0, None, &tx, &trace, collector, complete));
            last_activity = Instant::now();
        }
        Ok(finish(config, entries, None))
    }
}

fn diverged(e: &LoggedTx, what: &str) -> SessionError {
    SessionError::Diverged(format!("transaction {} {what}", e.tx_hash))
}

/// Re-executes a logged session's chain transitions and re-judges the
/// logged snapshots.
pub fn replay(log: &SessionLog) -> Result<SessionReport, SessionError> {
    let config = &log.config;
    let mut checked: Vec<LoggedTx> = Vec::with_capacity(log.entries.len());
    match config.mode {
        Mode::Soak => {
            let mut profile = config.stochastic.clone().ok_or_else(|| diverged_cfg("soak log without a profile"))?;
            profile.rng_seed = config.seed;
            let mut driver = StochasticDriver::new(profile).map_err(ConfigError::Invalid)?;
            let mut ctl = controller_for(config);
            let mut by_tick: HashMap<u64, Vec<&LoggedTx>> = HashMap::new();
            for e in &log.entries {
                by_tick.entry(e.tick.ok_or_else(|| diverged(e, "has no tick"))?).or_default().push(e);
            }
            for tick in 0..config.soak.ticks {
                for e in by_tick.get(&tick).into_iter().flatten() {
                    let hash = ctl.enqueue(Transaction::from(e.tx.clone())).map_err(|_| diverged(e, "was rejected"))?;
                    ctl.advance(&hash, Pending).map_err(|_| diverged(e, "could not be sent"))?;
                }
                ctl.stochastic_step(&mut driver);
            }
            if Some(driver.stats()) != log.soak.as_ref() {
                return Err(SessionError::Diverged("soak statistics differ".into()));
            }
            for e in &log.entries {
                let trace = ctl.trace(&e.tx_hash).ok_or_else(|| diverged(e, "is unknown"))?;
                checked.push(verify(e, trace, trace.current().is_terminal())?);
            }
            Ok(build_report(config, &checked, Some(driver.stats().clone())))
        }
        _ => {
            let plan = config.plan();
            let mut ctl = controller_for(config);
            let mut rep = None;
            for e in &log.entries {
                if rep != Some(e.repetition) {
                    ctl = controller_for(config);
                    rep = Some(e.repetition);
                }
                let hash = ctl.enqueue(Transaction::from(e.tx.clone())).map_err(|_| diverged(e, "was rejected"))?;
                if hash != e.tx_hash {
                    return Err(diverged(e, "hashes differently"));
                }
                // Abort where the original run aborted: the hook that failed is
                // the one after the last stored snapshot.
                let mut seen = 0usize;
                let stop_after = if e.complete { usize::MAX } else { e.snapshots.len() + 1 };
                let reason = e.abort_reason.clone().unwrap_or_else(|| "aborted".into());
                let mut hook = |_: &Controller, _: &StageContext| -> Result<(), HookError> {
                    seen += 1;
                    if seen >= stop_after {
                        return Err(HookError(reason.clone()));
                    }
                    Ok(())
                };
                let complete = match ctl.run_traversal(&hash, &plan, &mut hook) {
                    Ok(_) => true,
                    Err(_) => {
                        settle_aborted(&mut ctl, &hash);
                        false
                    }
                };
                let trace = ctl.trace(&hash).expect("enqueued transactions are tracked");
                checked.push(verify(e, trace, complete)?);
            }
            Ok(build_report(config, &checked, None))
        }
    }
}

fn diverged_cfg(what: &str) -> SessionError {
    SessionError::Diverged(what.to_string())
}

fn verify(e: &LoggedTx, trace: &LifecycleTrace, complete: bool) -> Result<LoggedTx, SessionError> {
    if stages(trace) != e.lifecycle {
        return Err(diverged(e, "took a different lifecycle"));
    }
    if complete != e.complete {
        return Err(diverged(e, "completed differently"));
    }
    Ok(e.clone())
}
