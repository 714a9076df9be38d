//! Simulated DApps with the three usual synchronization strategies.
//!
//! A mock owns the off-chain side of a tiny item ledger: `create` adds an
//! item with a balance of 100, `update` renames it and `withdraw` takes 10.
//! It builds its own transactions, so it knows what each hash is meant to do.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{Address, StateOp, Transaction, TxHash};
use crate::lifecycle::{Controller, DEFAULT_CONFIRMATIONS};
use crate::node::{rpc_get_state, ChainEvent, Delivery, EventBus, EventFilter, ReceiptStatus, Subscription};
use crate::snapshot::StateDocument;

pub const TAGS: [&str; 3] = ["create", "update", "withdraw"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Mirrors on-chain storage on a timer.
    PeriodicPolling,
    /// Applies an update once it has enough confirmations.
    #[default]
    PassiveWaiting,
    /// Applies on execution and reverts on reversal.
    AggressiveUpdating,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BugFlags {
    /// Apply the full update as soon as the transaction hash is known.
    pub type1_premature_update: bool,
    /// Never revert on reversal.
    pub type2_no_rollback: bool,
    /// `restart()` forgets the rollback table.
    pub rollback_cleared_on_restart: bool,
    /// Ticks between observing a chain event and acting on it.
    pub laggy_update: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockConfig {
    pub name: String,
    pub strategy: Strategy,
    pub bugs: BugFlags,
    pub confirmations: u64,
    pub poll_every: u64,
    /// Have the harness restart the mock right after the first execution capture.
    pub restart_after_execute: bool,
    pub tags: Vec<String>,
}

impl Default for MockConfig {
    fn default() -> Self {
        MockConfig {
            name: "mock".into(),
            strategy: Strategy::PassiveWaiting,
            bugs: BugFlags::default(),
            confirmations: DEFAULT_CONFIRMATIONS,
            poll_every: 1,
            restart_after_execute: false,
            tags: TAGS.iter().map(|t| t.to_string()).collect(),
        }
    }
}

impl MockConfig {
    pub fn new(name: &str, strategy: Strategy) -> Self {
        MockConfig { name: name.into(), strategy, ..Default::default() }
    }

    /// Named fixtures: `passive`, `aggressive`, `polling`, `type1`,
    /// `type2_no_rollback`, `type2_restart`.
    pub fn preset(name: &str) -> Option<Self> {
        use Strategy::*;
        let mut cfg = match name {
            "passive" => Self::new(name, PassiveWaiting),
            "aggressive" => Self::new(name, AggressiveUpdating),
            "polling" => Self::new(name, PeriodicPolling),
            "type1" => Self::new(name, PassiveWaiting),
            "type2_no_rollback" | "type2_restart" => Self::new(name, AggressiveUpdating),
            _ => return None,
        };
        match name {
            "type1" => cfg.bugs.type1_premature_update = true,
            "type2_no_rollback" => cfg.bugs.type2_no_rollback = true,
            "type2_restart" => {
                cfg.bugs.rollback_cleared_on_restart = true;
                cfg.restart_after_execute = true;
            }
            _ => {}
        }
        Some(cfg)
    }

    pub fn contract(&self) -> Address {
        Address::derive(&format!("{}-contract", self.name))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Item {
    title: String,
    balance: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Intent {
    Create { id: u64, title: String },
    Update { id: u64, title: String },
    Withdraw { id: u64 },
}

impl Intent {
    fn id(&self) -> u64 {
        match self {
            Intent::Create { id, .. } | Intent::Update { id, .. } | Intent::Withdraw { id } => *id,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            Intent::Create { .. } => "create",
            Intent::Update { .. } => "update",
            Intent::Withdraw { .. } => "withdraw",
        }
    }
}

#[derive(Clone, Debug)]
enum Mutation {
    Apply(TxHash),
    Revert(TxHash),
    Finalize(TxHash),
    Mirror(BTreeMap<u64, Item>),
}

const CREATE_BALANCE: i64 = 100;
const WITHDRAW_AMOUNT: i64 = 10;

pub struct MockDApp {
    config: MockConfig,
    contract: Address,
    subscription: Option<Subscription>,
    intents: HashMap<TxHash, Intent>,
    items: BTreeMap<u64, Item>,
    pending: BTreeSet<u64>,
    /// Rollback table: prior value of the touched item per applied tx.
    undo: HashMap<TxHash, Option<Item>>,
    applied: BTreeSet<TxHash>,
    lagged: Vec<(u64, Mutation)>,
    last_poll: Option<u64>,
    next_id: u64,
    sent: u64,
    events_seen: u64,
    restarts: u64,
}

impl MockDApp {
    pub fn new(config: MockConfig) -> Self {
        MockDApp {
            contract: config.contract(),
            config,
            subscription: None,
            intents: HashMap::new(),
            items: BTreeMap::new(),
            pending: BTreeSet::new(),
            undo: HashMap::new(),
            applied: BTreeSet::new(),
            lagged: Vec::new(),
            last_poll: None,
            next_id: 1,
            sent: 0,
            events_seen: 0,
            restarts: 0,
        }
    }

    pub fn config(&self) -> &MockConfig {
        &self.config
    }

    pub fn contract(&self) -> Address {
        self.contract
    }

    pub fn attach(&mut self, bus: &EventBus) {
        self.subscription = Some(bus.subscribe(EventFilter::All));
    }

    /// Builds the next transaction for `tag`. Updates and withdrawals target
    /// the most recent item and fall back to a create when there is none.
    pub fn make_tx(&mut self, tag: &str) -> Transaction {
        let latest = self.intents.values().filter_map(|i| matches!(i, Intent::Create { .. }).then(|| i.id())).max();
        let intent = match (tag, latest) {
            ("update", Some(id)) => Intent::Update { id, title: format!("item-{id}-rev{}", self.sent) },
            ("withdraw", Some(id)) => Intent::Withdraw { id },
            _ => {
                let id = self.next_id;
                self.next_id += 1;
                Intent::Create { id, title: format!("item-{id}") }
            }
        };
        let payload = match &intent {
            Intent::Create { id, title } => vec![
                StateOp::set(format!("item:{id}:title"), title.clone()),
                StateOp::increment(format!("item:{id}:balance"), CREATE_BALANCE),
            ],
            Intent::Update { id, title } => vec![StateOp::set(format!("item:{id}:title"), title.clone())],
            Intent::Withdraw { id } => vec![StateOp::increment(format!("item:{id}:balance"), -WITHDRAW_AMOUNT)],
        };
        let sender = Address::derive(&format!("{}-user-{}", self.config.name, self.sent));
        self.sent += 1;
        let tx = Transaction::new(sender, 0, self.contract, payload, Some(intent.tag().to_string()));
        self.intents.insert(tx.hash(), intent);
        tx
    }

    /// Picks a declared tag uniformly.
    pub fn random_tx(&mut self, rng: &mut impl Rng) -> Transaction {
        let tag = self.config.tags[rng.random_range(0..self.config.tags.len())].clone();
        self.make_tx(&tag)
    }

    /// Simulates a page reload in the middle of a session.
    pub fn restart(&mut self) {
        self.restarts += 1;
        if self.config.bugs.rollback_cleared_on_restart {
            self.undo.clear();
        }
    }

    /// Processes buffered events, then lets the clock reach `ctl`'s now.
    pub fn sync(&mut self, ctl: &Controller) {
        let now = ctl.clock().now();
        let deliveries = self.subscription.as_ref().map(|s| s.drain()).unwrap_or_default();
        for d in deliveries {
            if let Delivery::Event(env) = d {
                self.on_event(&env.event, now);
            }
        }
        self.on_tick(ctl, now);
    }

    pub fn on_event(&mut self, event: &ChainEvent, now: u64) {
        self.events_seen += 1;
        let Some(tx) = event.tx_hash() else { return };
        if !self.intents.contains_key(&tx) {
            return;
        }
        let bugs = &self.config.bugs;
        match event {
            ChainEvent::TransactionHash { .. } => {
                // The DApp's own send-time bookkeeping; never delayed.
                if bugs.type1_premature_update {
                    self.apply(tx);
                } else if self.config.strategy == Strategy::PassiveWaiting {
                    self.pending.insert(self.intents[&tx].id());
                }
            }
            ChainEvent::Receipt { status: ReceiptStatus::Success, .. }
                if self.config.strategy == Strategy::AggressiveUpdating =>
            {
                self.schedule(now, Mutation::Apply(tx));
            }
            ChainEvent::Changed { .. }
                if self.config.strategy == Strategy::AggressiveUpdating && !bugs.type2_no_rollback =>
            {
                self.schedule(now, Mutation::Revert(tx));
            }
            ChainEvent::Confirmation { count, .. }
                if self.config.strategy == Strategy::PassiveWaiting && *count == self.config.confirmations =>
            {
                self.schedule(now, Mutation::Finalize(tx));
            }
            _ => {}
        }
    }

    /// Applies lagged mutations that are due and polls when it is time.
    pub fn on_tick(&mut self, ctl: &Controller, now: u64) {
        if self.config.strategy == Strategy::PeriodicPolling {
            let due = self.last_poll.is_none_or(|last| now >= last + self.config.poll_every.max(1));
            if due {
                self.last_poll = Some(now);
                let mirror = self.read_chain(ctl);
                self.schedule(now, Mutation::Mirror(mirror));
            }
        }
        let (ready, later): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.lagged).into_iter().partition(|(t, _)| *t <= now);
        self.lagged = later;
        for (_, m) in ready {
            self.perform(m);
        }
    }

    fn schedule(&mut self, now: u64, m: Mutation) {
        match self.config.bugs.laggy_update {
            Some(delay) if delay > 0 => self.lagged.push((now + delay, m)),
            _ => self.perform(m),
        }
    }

    fn perform(&mut self, m: Mutation) {
        match m {
            Mutation::Apply(tx) => self.apply(tx),
            Mutation::Revert(tx) => self.revert(tx),
            Mutation::Finalize(tx) => {
                self.pending.remove(&self.intents[&tx].id());
                self.apply(tx);
            }
            Mutation::Mirror(items) => self.items = items,
        }
    }

    fn apply(&mut self, tx: TxHash) {
        if !self.applied.insert(tx) {
            return;
        }
        let intent = self.intents[&tx].clone();
        let id = intent.id();
        self.undo.insert(tx, self.items.get(&id).cloned());
        match intent {
            Intent::Create { title, .. } => {
                self.items.insert(id, Item { title, balance: CREATE_BALANCE });
            }
            Intent::Update { title, .. } => {
                if let Some(item) = self.items.get_mut(&id) {
                    item.title = title;
                }
            }
            Intent::Withdraw { .. } => {
                if let Some(item) = self.items.get_mut(&id) {
                    item.balance -= WITHDRAW_AMOUNT;
                }
            }
        }
    }

    fn revert(&mut self, tx: TxHash) {
        // Without a rollback entry there is nothing to restore from.
        let Some(prior) = self.undo.remove(&tx) else { return };
        self.applied.remove(&tx);
        let id = self.intents[&tx].id();
        match prior {
            Some(item) => self.items.insert(id, item),
            None => self.items.remove(&id),
        };
    }

    fn read_chain(&self, ctl: &Controller) -> BTreeMap<u64, Item> {
        let entries = rpc_get_state(ctl, &self.contract, None).entries.unwrap_or_default();
        let mut items: BTreeMap<u64, Item> = BTreeMap::new();
        for (key, value) in entries {
            let mut parts = key.splitn(3, ':');
            let (Some("item"), Some(id), Some(field)) = (parts.next(), parts.next(), parts.next()) else {
                continue;
            };
            let Ok(id) = id.parse() else { continue };
            let item = items.entry(id).or_insert(Item { title: String::new(), balance: 0 });
            match (field, value) {
                ("title", v) => item.title = v.to_string(),
                ("balance", v) => item.balance = v.as_integer().unwrap_or(0),
                _ => {}
            }
        }
        items
    }

    /// The off-chain state as exposed to the snapshot collector.
    pub fn document(&self) -> StateDocument {
        let items = self
            .items
            .iter()
            .map(|(id, item)| {
                map([
                    ("id", StateDocument::Int(*id as i64)),
                    ("title", item.title.as_str().into()),
                    ("balance", item.balance.into()),
                    ("display", format!("#{id} {} ({})", item.title, item.balance).as_str().into()),
                ])
            })
            .collect();
        let pending = self.pending.iter().map(|id| StateDocument::Int(*id as i64)).collect();
        map([
            ("items", StateDocument::List(items)),
            ("pending", StateDocument::List(pending)),
            (
                "meta",
                map([
                    ("events_seen", (self.events_seen as i64).into()),
                    ("restarts", (self.restarts as i64).into()),
                    ("queued", (self.lagged.len() as i64).into()),
                ]),
            ),
        ])
    }

    pub fn intent_tag(&self, tx: &TxHash) -> Option<&'static str> {
        self.intents.get(tx).map(|i| i.tag())
    }
}

fn map<const N: usize>(fields: [(&str, StateDocument); N]) -> StateDocument {
    StateDocument::Map(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifecycle::{LifecycleState, TraversalPlan};
    use crate::node::SubmitMode;

    fn run(cfg: MockConfig, tag: &str) -> Vec<(String, StateDocument)> {
        let mut ctl = Controller::default();
        let mut mock = MockDApp::new(cfg);
        mock.attach(ctl.bus());
        let tx = mock.make_tx(tag);
        let h = crate::node::rpc_submit_transaction(&mut ctl, tx.to_request(), SubmitMode::Queued).unwrap();
        let mut seen = Vec::new();
        let mut hook = |c: &Controller, ctx: &crate::lifecycle::StageContext| {
            mock.sync(c);
            seen.push((ctx.stage.to_string(), mock.document()));
            Ok(())
        };
        ctl.run_traversal(&h, &TraversalPlan::bug_exposing(), &mut hook).unwrap();
        assert_eq!(ctl.current_state(&h).unwrap(), LifecycleState::Finalized);
        seen
    }

    fn items(d: &StateDocument) -> &StateDocument {
        d.get("items").unwrap()
    }

    #[test]
    fn passive_updates_only_at_finalization() {
        let seen = run(MockConfig::preset("passive").unwrap(), "create");
        let empty = StateDocument::List(vec![]);
        for (stage, doc) in &seen[..5] {
            assert_eq!(items(doc), &empty, "{stage}");
        }
        assert_ne!(items(&seen[5].1), &empty);
        assert_eq!(seen[1].1.get("pending"), Some(&StateDocument::List(vec![1.into()])));
        assert_eq!(seen[5].1.get("pending"), Some(&empty));
    }

    #[test]
    fn aggressive_reverts_on_reversal() {
        let seen = run(MockConfig::preset("aggressive").unwrap(), "create");
        let docs: Vec<_> = seen.iter().map(|(_, d)| items(d).clone()).collect();
        assert_eq!(docs[1], docs[3]);
        assert_eq!(docs[2], docs[4]);
        assert_ne!(docs[1], docs[2]);
    }

    #[test]
    fn no_rollback_keeps_update() {
        let seen = run(MockConfig::preset("type2_no_rollback").unwrap(), "create");
        assert_ne!(items(&seen[1].1), items(&seen[3].1));
    }

    #[test]
    fn premature_update_is_visible_while_pending() {
        let seen = run(MockConfig::preset("type1").unwrap(), "create");
        assert_eq!(items(&seen[1].1), items(&seen[5].1));
        assert_ne!(items(&seen[0].1), items(&seen[5].1));
    }

    #[test]
    fn polling_mirrors_chain() {
        let seen = run(MockConfig::preset("polling").unwrap(), "create");
        let docs: Vec<_> = seen.iter().map(|(_, d)| items(d).clone()).collect();
        assert_eq!(docs[0], docs[1]);
        assert_eq!(docs[1], docs[3]);
        assert_eq!(docs[2], docs[5]);
        assert_ne!(docs[0], docs[5]);
    }

    #[test]
    fn restart_clears_rollback_table_only_when_buggy() {
        for (preset, reverted) in [("aggressive", true), ("type2_restart", false)] {
            let mut ctl = Controller::default();
            let mut mock = MockDApp::new(MockConfig::preset(preset).unwrap());
            mock.attach(ctl.bus());
            let h = ctl.submit(mock.make_tx("create")).unwrap();
            ctl.advance(&h, LifecycleState::Executed).unwrap();
            mock.sync(&ctl);
            mock.restart();
            ctl.advance(&h, LifecycleState::Reversed).unwrap();
            mock.sync(&ctl);
            assert_eq!(items(&mock.document()) == &StateDocument::List(vec![]), reverted, "{preset}");
        }
    }

    #[test]
    fn update_and_withdraw_target_latest_item() {
        let mut mock = MockDApp::new(MockConfig::default());
        let c = mock.make_tx("create");
        let u = mock.make_tx("update");
        let w = mock.make_tx("withdraw");
        assert_eq!(c.tag.as_deref(), Some("create"));
        assert_eq!(u.payload, vec![StateOp::set("item:1:title", "item-1-rev1")]);
        assert_eq!(w.payload, vec![StateOp::increment("item:1:balance", -10)]);
        assert_ne!(c.sender, u.sender);
        assert_eq!(mock.make_tx("withdraw").tag.as_deref(), Some("withdraw"));
        assert_eq!(MockDApp::new(MockConfig::default()).make_tx("update").tag.as_deref(), Some("create"));
    }
}
