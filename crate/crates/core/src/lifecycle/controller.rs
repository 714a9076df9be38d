use std::collections::{HashMap, HashSet};
use std::sync::Mutex;

use indexmap::IndexSet;
use thiserror::Error;

use super::model::{LifecycleState, LifecycleTrace, Stage, TraceStep, TransitionRecord, TraversalPlan};
use super::stochastic::StochasticDriver;
use crate::chain::{Chain, ChainError, ChainUpdate, RejectReason, SubmitOutcome, Transaction, TxHash};
use crate::clock::LogicalClock;
use crate::node::events::{ChainEvent, EventBus, ReceiptStatus, DEFAULT_SUBSCRIPTION_BUFFER};

use LifecycleState::*;

pub const DEFAULT_CONFIRMATIONS: u64 = 6;

#[derive(Clone, Debug)]
pub struct ControllerConfig {
    /// Confirmations required before a transaction counts as finalized.
    pub confirmations: u64,
    pub event_buffer: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig { confirmations: DEFAULT_CONFIRMATIONS, event_buffer: DEFAULT_SUBSCRIPTION_BUFFER }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ControllerError {
    #[error("unknown transaction {0}")]
    UnknownTx(TxHash),
    #[error("{from} -> {to} is not a lifecycle transition")]
    InvalidEdge { from: LifecycleState, to: LifecycleState },
    #[error("transaction is already {0}")]
    Terminal(LifecycleState),
    #[error("traversal must start from a fresh created transaction (currently {0})")]
    NotFresh(LifecycleState),
    #[error("plan must start at created")]
    BadPlan,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("transition to {expected} did not settle (transaction is {actual})")]
    Unsettled { expected: LifecycleState, actual: LifecycleState },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("stage hook failed: {0}")]
pub struct HookError(pub String);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraversalError {
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Hook(#[from] HookError),
}

/// Where a traversal currently stands, handed to stage hooks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageContext {
    pub tx_hash: TxHash,
    pub stage: Stage,
    pub logical_timestamp: u64,
}

/// Callback fired after each traversal stage has settled.
pub trait StageHooks {
    fn on_stage(&mut self, controller: &Controller, ctx: &StageContext) -> Result<(), HookError>;
}

/// Hooks that do nothing.
pub struct NoHooks;

impl StageHooks for NoHooks {
    fn on_stage(&mut self, _: &Controller, _: &StageContext) -> Result<(), HookError> {
        Ok(())
    }
}

impl<F> StageHooks for F
where
    F: FnMut(&Controller, &StageContext) -> Result<(), HookError>,
{
    fn on_stage(&mut self, controller: &Controller, ctx: &StageContext) -> Result<(), HookError> {
        self(controller, ctx)
    }
}

/// Drives transactions through their lifecycle on a [`Chain`] and emits the
/// client-visible events for every transition.
#[derive(Debug)]
pub struct Controller {
    chain: Chain,
    bus: EventBus,
    config: ControllerConfig,
    traces: HashMap<TxHash, LifecycleTrace>,
    order: Vec<TxHash>,
    /// Transactions held at Created, not yet handed to the chain.
    held: HashMap<TxHash, Transaction>,
    tags: HashMap<TxHash, Option<String>>,
    announced: HashSet<TxHash>,
    /// Executed and not yet finalized, in execution order.
    open: IndexSet<TxHash>,
    confirmations_sent: HashMap<TxHash, u64>,
    sequence: u64,
}

impl Default for Controller {
    fn default() -> Self {
        Self::new(ControllerConfig::default(), LogicalClock::new())
    }
}

impl Controller {
    pub fn new(config: ControllerConfig, clock: LogicalClock) -> Self {
        Controller {
            chain: Chain::new(clock),
            bus: EventBus::with_capacity(config.event_buffer),
            config,
            traces: HashMap::new(),
            order: Vec::new(),
            held: HashMap::new(),
            tags: HashMap::new(),
            announced: HashSet::new(),
            open: IndexSet::new(),
            confirmations_sent: HashMap::new(),
            sequence: 0,
        }
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn bus(&self) -> &EventBus {
        &self.bus
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn clock(&self) -> &LogicalClock {
        self.chain.clock()
    }

    pub fn trace(&self, tx: &TxHash) -> Option<&LifecycleTrace> {
        self.traces.get(tx)
    }

    /// Every trace, in creation order.
    pub fn traces(&self) -> impl Iterator<Item = &LifecycleTrace> {
        self.order.iter().map(|h| &self.traces[h])
    }

    pub fn tag(&self, tx: &TxHash) -> Option<&str> {
        self.tags.get(tx).and_then(|t| t.as_deref())
    }

    pub fn transaction(&self, tx: &TxHash) -> Option<&Transaction> {
        self.held.get(tx).or_else(|| self.chain.transaction(tx))
    }

    pub fn current_state(&self, tx: &TxHash) -> Result<LifecycleState, ControllerError> {
        self.traces.get(tx).map(|t| t.current()).ok_or(ControllerError::UnknownTx(*tx))
    }

    /// Transactions held at Created that no traversal has touched, oldest first.
    pub fn queued(&self) -> impl Iterator<Item = TxHash> + '_ {
        self.order.iter().copied().filter(|h| {
            let t = &self.traces[h];
            t.steps.len() == 1 && t.current() == Created
        })
    }

    /// Registers a transaction at Created without handing it to the chain.
    pub fn enqueue(&mut self, tx: Transaction) -> Result<TxHash, ControllerError> {
        let hash = tx.hash();
        if self.traces.contains_key(&hash) {
            return Err(ChainError::Rejected(RejectReason::Duplicate).into());
        }
        if self.chain.is_canonical(&hash) {
            return Err(ChainError::Rejected(RejectReason::AlreadyOnChain).into());
        }
        self.traces
            .insert(hash, LifecycleTrace { tx_hash: hash, steps: Vec::new(), complete: false, abort_reason: None });
        self.order.push(hash);
        self.tags.insert(hash, tx.tag.clone());
        self.held.insert(hash, tx);
        self.record(hash, Created, None);
        Ok(hash)
    }

    /// Registers and immediately sends a transaction to the pool.
    pub fn submit(&mut self, tx: Transaction) -> Result<TxHash, ControllerError> {
        let hash = self.enqueue(tx)?;
        if let Err(e) = self.advance(&hash, Pending) {
            self.forget(&hash);
            return Err(e);
        }
        Ok(hash)
    }

    fn forget(&mut self, hash: &TxHash) {
        self.traces.remove(hash);
        self.held.remove(hash);
        self.tags.remove(hash);
        self.order.retain(|h| h != hash);
    }

    fn record(
        &mut self,
        tx: TxHash,
        state: LifecycleState,
        block: Option<crate::chain::BlockHash>,
    ) -> TransitionRecord {
        let trace = self.traces.get_mut(&tx).expect("recorded transactions are tracked");
        let from = trace.current();
        let visit_index = trace.visits(state) + 1;
        let step = TraceStep {
            state,
            visit_index,
            logical_timestamp: self.chain.clock().now(),
            sequence: self.sequence,
            block_context: block,
        };
        self.sequence += 1;
        trace.steps.push(step.clone());
        TransitionRecord {
            tx_hash: tx,
            from,
            to: state,
            visit_index,
            logical_timestamp: step.logical_timestamp,
            sequence: step.sequence,
            block_context: block,
        }
    }

    fn state_of(&self, tx: &TxHash) -> Option<LifecycleState> {
        self.traces.get(tx).map(|t| t.current())
    }

    /// Performs the chain action realizing `current -> target` for `tx`.
    ///
    /// Returns every transition that happened, the requested one last.
    pub fn advance_all(
        &mut self,
        tx: &TxHash,
        target: LifecycleState,
    ) -> Result<Vec<TransitionRecord>, ControllerError> {
        let from = self.current_state(tx)?;
        if from.is_terminal() {
            return Err(ControllerError::Terminal(from));
        }
        if !from.can_transition_to(target) {
            return Err(ControllerError::InvalidEdge { from, to: target });
        }
        let mut records = Vec::new();
        match (from, target) {
            (Created, Pending) => {
                let body = self.held.get(tx).cloned().ok_or(ControllerError::UnknownTx(*tx))?;
                let outcome = self.chain.submit(body)?;
                self.held.remove(tx);
                if let SubmitOutcome::Replaced(old) = outcome {
                    // The evicted transaction vanishes without any event.
                    if self.state_of(&old.hash()).is_some_and(|s| !s.is_terminal()) {
                        records.push(self.record(old.hash(), Dropped, None));
                    }
                }
                records.push(self.record(*tx, Pending, None));
                if self.announced.insert(*tx) {
                    self.bus.emit(ChainEvent::TransactionHash { tx_hash: *tx });
                }
            }
            (Pending | Reversed, Executed) => {
                let head = self.chain.head();
                let mined = self.chain.mine_block(head, &[*tx])?;
                records.extend(self.settle(mined.update));
            }
            (Executed, Reversed) => {
                let block = self.chain.block_of(tx).expect("executed transactions are canonical");
                let fork_height = self.chain.block(&block).map(|b| b.height).unwrap_or_default();
                let report = self.chain.reorganize(fork_height, &[])?;
                records.extend(self.settle(report.update));
            }
            (Executed, Finalized) => {
                let have = self.chain.confirmations(tx).unwrap_or(0);
                for _ in have..self.config.confirmations {
                    let head = self.chain.head();
                    let mined = self.chain.mine_block(head, &[])?;
                    records.extend(self.settle(mined.update));
                }
                if self.current_state(tx)? == Executed {
                    records.push(self.finalize(tx));
                }
            }
            (Pending | Reversed, Dropped) => {
                self.chain.drop_tx(tx)?;
                records.push(self.record(*tx, Dropped, None));
            }
            _ => unreachable!("edge table covers every case"),
        }
        let actual = self.current_state(tx)?;
        if actual != target {
            return Err(ControllerError::Unsettled { expected: target, actual });
        }
        if let Some(pos) = records.iter().rposition(|r| r.tx_hash == *tx && r.to == target) {
            let mine = records.remove(pos);
            records.push(mine);
        }
        Ok(records)
    }

    /// Like [`advance_all`](Self::advance_all), returning only the requested transition.
    pub fn advance(&mut self, tx: &TxHash, target: LifecycleState) -> Result<TransitionRecord, ControllerError> {
        let mut records = self.advance_all(tx, target)?;
        Ok(records.pop().expect("advance records the requested transition"))
    }

    fn finalize(&mut self, tx: &TxHash) -> TransitionRecord {
        self.open.shift_remove(tx);
        let block = self.chain.block_of(tx);
        self.record(*tx, Finalized, block)
    }

    /// Maps a head switch onto lifecycle transitions and events.
    pub(crate) fn settle(&mut self, update: ChainUpdate) -> Vec<TransitionRecord> {
        let mut records = Vec::new();
        for (tx, orphaned) in &update.reversed {
            if self.state_of(tx) == Some(Executed) {
                self.open.shift_remove(tx);
                self.confirmations_sent.remove(tx);
                records.push(self.record(*tx, Reversed, Some(*orphaned)));
                self.bus.emit(ChainEvent::Changed { tx_hash: *tx, orphaned_block_hash: *orphaned });
            }
        }
        for tx in &update.evicted {
            if self.state_of(tx).is_some_and(|s| !s.is_terminal()) {
                records.push(self.record(*tx, Dropped, None));
            }
        }
        for block_hash in &update.connected {
            let block = self.chain.block(block_hash).expect("connected block exists").clone();
            self.bus.emit(ChainEvent::NewBlock { block_hash: block.hash, height: block.height });
            for tx in &block.transactions {
                let hash = tx.hash();
                if matches!(self.state_of(&hash), Some(Pending | Reversed)) {
                    let status = match self.chain.receipt_status(&hash) {
                        Some(false) => ReceiptStatus::Failed,
                        _ => ReceiptStatus::Success,
                    };
                    records.push(self.record(hash, Executed, Some(block.hash)));
                    self.open.insert(hash);
                    self.bus.emit(ChainEvent::Receipt { tx_hash: hash, block_hash: block.hash, status });
                }
            }
            let open: Vec<TxHash> = self.open.iter().copied().collect();
            for tx in open {
                let Some(tx_height) = self.chain.block_of(&tx).and_then(|b| self.chain.block(&b)).map(|b| b.height)
                else {
                    continue;
                };
                if tx_height > block.height {
                    continue;
                }
                let depth = (block.height - tx_height).min(self.config.confirmations);
                let sent = self.confirmations_sent.entry(tx).or_insert(0);
                while *sent < depth {
                    *sent += 1;
                    self.bus.emit(ChainEvent::Confirmation { tx_hash: tx, count: *sent });
                }
            }
        }
        records
    }

    /// Finalizes every executed transaction that has enough confirmations.
    pub fn finalize_ready(&mut self) -> Vec<TransitionRecord> {
        let ready: Vec<TxHash> = self
            .open
            .iter()
            .filter(|tx| self.chain.confirmations(tx).unwrap_or(0) >= self.config.confirmations)
            .copied()
            .collect();
        ready.iter().map(|tx| self.finalize(tx)).collect()
    }

    /// Checks that `tx` is fresh and `plan` can start, returning the Created stage.
    pub fn begin_traversal(&self, tx: &TxHash, plan: &TraversalPlan) -> Result<StageContext, ControllerError> {
        if plan.states().first() != Some(&Created) {
            return Err(ControllerError::BadPlan);
        }
        let trace = self.traces.get(tx).ok_or(ControllerError::UnknownTx(*tx))?;
        if trace.steps.len() != 1 || trace.current() != Created {
            return Err(ControllerError::NotFresh(trace.current()));
        }
        Ok(StageContext {
            tx_hash: *tx,
            stage: Stage::first(Created),
            logical_timestamp: trace.steps[0].logical_timestamp,
        })
    }

    /// Takes one traversal step and describes the stage it settled on.
    pub fn step_traversal(&mut self, tx: &TxHash, target: LifecycleState) -> Result<StageContext, ControllerError> {
        let rec = self.advance(tx, target)?;
        Ok(StageContext { tx_hash: *tx, stage: rec.stage(), logical_timestamp: rec.logical_timestamp })
    }

    pub fn end_traversal(&mut self, tx: &TxHash, failure: Option<&TraversalError>) {
        if let Some(trace) = self.traces.get_mut(tx) {
            trace.complete = failure.is_none();
            trace.abort_reason = failure.map(|e| e.to_string());
        }
    }

    /// Drives `tx` through `plan`, calling `hooks` once each stage settles.
    ///
    /// On failure the trace is kept, marked incomplete, and returned with the error.
    pub fn run_traversal(
        &mut self,
        tx: &TxHash,
        plan: &TraversalPlan,
        hooks: &mut dyn StageHooks,
    ) -> Result<LifecycleTrace, (TraversalError, Option<LifecycleTrace>)> {
        let result = self.drive(tx, plan, hooks);
        self.end_traversal(tx, result.as_ref().err());
        let trace = self.traces.get(tx).cloned();
        match result {
            Ok(()) => Ok(trace.expect("traversed transaction is tracked")),
            Err(e) => Err((e, trace)),
        }
    }

    fn drive(&mut self, tx: &TxHash, plan: &TraversalPlan, hooks: &mut dyn StageHooks) -> Result<(), TraversalError> {
        let ctx = self.begin_traversal(tx, plan)?;
        hooks.on_stage(self, &ctx)?;
        for target in &plan.states()[1..] {
            let ctx = self.step_traversal(tx, *target)?;
            hooks.on_stage(self, &ctx)?;
        }
        Ok(())
    }

    /// Advances the simulation by one block tick under a stochastic profile.
    pub fn stochastic_step(&mut self, driver: &mut StochasticDriver) -> Vec<TransitionRecord> {
        driver.step(self)
    }

    pub(crate) fn chain_mut(&mut self) -> &mut Chain {
        &mut self.chain
    }

    pub(crate) fn drop_silently(&mut self, tx: &TxHash) -> Option<TransitionRecord> {
        match self.state_of(tx) {
            Some(Pending | Reversed) => {
                self.chain.drop_tx(tx).ok()?;
                Some(self.record(*tx, Dropped, None))
            }
            _ => None,
        }
    }
}

/// Runs a traversal against a controller shared with other threads.
///
/// The lock is held only while a transition executes; hooks run unlocked so
/// that readers (RPC handlers) can observe the settled stage.
pub fn run_traversal_shared(
    controller: &Mutex<Controller>,
    tx: &TxHash,
    plan: &TraversalPlan,
    hooks: &mut dyn FnMut(&StageContext) -> Result<(), HookError>,
) -> Result<LifecycleTrace, (TraversalError, Option<LifecycleTrace>)> {
    let drive = |hooks: &mut dyn FnMut(&StageContext) -> Result<(), HookError>| -> Result<(), TraversalError> {
        let ctx = controller.lock().unwrap().begin_traversal(tx, plan)?;
        hooks(&ctx)?;
        for target in &plan.states()[1..] {
            let ctx = controller.lock().unwrap().step_traversal(tx, *target)?;
            hooks(&ctx)?;
        }
        Ok(())
    };
    let result = drive(hooks);
    let mut guard = controller.lock().unwrap();
    guard.end_traversal(tx, result.as_ref().err());
    let trace = guard.trace(tx).cloned();
    match result {
        Ok(()) => Ok(trace.expect("traversed transaction is tracked")),
        Err(e) => Err((e, trace)),
    }
}
