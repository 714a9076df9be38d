//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;

use txforge_core::chain::{Address, StateOp, Transaction, TxHash, Value};
use txforge_core::lifecycle::{Controller, ControllerConfig, LifecycleState, Stage, TraversalPlan};
use txforge_core::node::ChainEvent;
use txforge_core::oracle::TransactionSnapshotTrace;
use txforge_core::session::{run_in_process, DappSpec, SessionConfig, SessionOutcome};
use txforge_core::snapshot::{Snapshot, StateDocument, WaitWindow};

use LifecycleState::*;

pub const DEFAULT_SLOTS: [Stage; 6] = [
    Stage::new(Created, 1),
    Stage::new(Pending, 1),
    Stage::new(Executed, 1),
    Stage::new(Reversed, 1),
    Stage::new(Executed, 2),
    Stage::new(Finalized, 1),
];

/// In-process traverse config for a named mock.
pub fn traverse_config(preset: &str, txs: usize, seed: u64) -> SessionConfig {
    let mut c = SessionConfig::default();
    c.dapp = Some(DappSpec::preset(preset));
    c.txs = txs;
    c.seed = seed;
    c.wait = WaitWindow::Ticks(0);
    c
}

pub fn run(config: &SessionConfig) -> SessionOutcome {
    run_in_process(config).expect("session runs")
}

/// A snapshot trace over the six default slots; `None` leaves a slot empty.
pub fn abstract_trace(values: [Option<u8>; 6]) -> TransactionSnapshotTrace {
    let mut t = TransactionSnapshotTrace::new(TxHash::default(), Some("t".into()));
    for (stage, v) in DEFAULT_SLOTS.iter().zip(values) {
        if let Some(v) = v {
            t.insert(Snapshot {
                tx_hash: t.tx_hash,
                stage: *stage,
                captured_at: 0,
                source_id: "abstract".into(),
                rules_fingerprint: "f".into(),
                document: StateDocument::Int(v as i64),
            });
        }
    }
    t.complete = values.iter().all(|v| v.is_some());
    t
}

/// Assertion 1 evaluated straight from its formula: C != F implies P != F.
pub fn brute_a1(c: u8, p: u8, f: u8) -> bool {
    !(c != f) || (p != f)
}

/// Assertion 2 evaluated straight from its formula: P == R.
pub fn brute_a2(p: u8, r: u8) -> bool {
    p == r
}

/// Events a single transaction should produce for the given state walk.
/// Receipts are `success`; every Executed -> Finalized leg carries `k`
/// confirmations because the transaction is always mined at the head.
pub fn expected_events(tx: TxHash, walk: &[LifecycleState], k: u64) -> Vec<String> {
    let mut out = Vec::new();
    let mut announced = false;
    for pair in walk.windows(2) {
        match (pair[0], pair[1]) {
            (_, Pending) if !announced => {
                announced = true;
                out.push(format!("transaction_hash {tx}"));
            }
            (_, Executed) => out.push(format!("receipt {tx} success")),
            (_, Reversed) => out.push(format!("changed {tx}")),
            (Executed, Finalized) => {
                for i in 1..=k {
                    out.push(format!("confirmation {tx} {i}"));
                }
            }
            _ => {}
        }
    }
    out
}

pub fn render_event(e: &ChainEvent) -> String {
    match e {
        ChainEvent::TransactionHash { tx_hash } => format!("transaction_hash {tx_hash}"),
        ChainEvent::Receipt { tx_hash, status, .. } => {
            format!("receipt {tx_hash} {}", serde_json::to_value(status).unwrap().as_str().unwrap())
        }
        ChainEvent::Confirmation { tx_hash, count } => format!("confirmation {tx_hash} {count}"),
        ChainEvent::Changed { tx_hash, .. } => format!("changed {tx_hash}"),
        ChainEvent::NewBlock { height, .. } => format!("new_block {height}"),
    }
}

/// Storage model written independently of the chain crate: strings and
/// integers, whole-transaction atomicity, `fail` aborts everything.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FoldState(pub BTreeMap<(Address, String), FoldValue>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FoldValue {
    Text(String),
    Num(i64),
}

impl FoldState {
    pub fn apply(&mut self, target: Address, payload: &[StateOp]) {
        let mut next = self.0.clone();
        for op in payload {
            match op {
                StateOp::Set { key, value } => {
                    next.insert((target, key.clone()), FoldValue::Text(value.clone()));
                }
                StateOp::Delete { key } => {
                    next.remove(&(target, key.clone()));
                }
                StateOp::Increment { key, amount } => {
                    let current = match next.get(&(target, key.clone())) {
                        None => 0,
                        Some(FoldValue::Num(n)) => *n,
                        Some(FoldValue::Text(s)) => match s.parse::<i64>() {
                            Ok(n) if n.to_string() == *s => n,
                            _ => return,
                        },
                    };
                    let Some(sum) = current.checked_add(*amount) else { return };
                    next.insert((target, key.clone()), FoldValue::Num(sum));
                }
                StateOp::Fail => return,
            }
        }
        self.0 = next;
    }
}

pub fn op() -> impl Strategy<Value = StateOp> {
    let key = prop::sample::select(vec!["a", "b", "c", "n"]);
    prop_oneof![
        4 => (key.clone(), "[0-9x]{1,2}").prop_map(|(k, v)| StateOp::set(k, v)),
        2 => key.clone().prop_map(StateOp::delete),
        4 => (key, -5i64..5).prop_map(|(k, n)| StateOp::increment(k, n)),
        1 => Just(StateOp::Fail),
    ]
}

/// Random state walks from Created that end in a terminal state.
pub fn walk() -> impl Strategy<Value = Vec<LifecycleState>> {
    prop::collection::vec(any::<prop::sample::Index>(), 1..12).prop_map(|picks| {
        let mut states = vec![Created, Pending];
        for pick in picks {
            let here = *states.last().unwrap();
            if here.is_terminal() {
                break;
            }
            let next: Vec<_> = here.successors().collect();
            states.push(*pick.get(&next));
        }
        // Finish the walk at a terminal state.
        match *states.last().unwrap() {
            Pending | Reversed => states.push(Dropped),
            Executed => states.push(Finalized),
            _ => {}
        }
        states
    })
}

pub fn fold_of(ctl: &Controller) -> FoldState {
    let mut out = FoldState::default();
    for (addr, storage) in &ctl.chain().state().contracts {
        for (k, v) in storage {
            let v = match v {
                Value::Int(n) => FoldValue::Num(*n),
                Value::Str(s) => FoldValue::Text(s.clone()),
            };
            out.0.insert((*addr, k.clone()), v);
        }
    }
    out
}

/// (keep, second target, payload) per transaction.
pub type NeutralityInput = Vec<(bool, bool, Vec<StateOp>)>;

pub fn neutrality_input() -> impl Strategy<Value = NeutralityInput> {
    prop::collection::vec((any::<bool>(), any::<bool>(), prop::collection::vec(op(), 1..4)), 1..8)
}

/// Kept transactions are finalized, the rest executed, reversed and dropped;
/// chain state must equal the fold of the kept ones after every step.
pub fn neutrality_case(txs: NeutralityInput) -> Result<(), TestCaseError> {
    let mut ctl = Controller::default();
    let mut model = FoldState::default();
    let targets = [Address::derive("t0"), Address::derive("t1")];
    for (i, (keep, second_target, payload)) in txs.into_iter().enumerate() {
        let target = targets[second_target as usize];
        let tx = Transaction::new(Address::derive(&format!("s{i}")), 0, target, payload.clone(), None);
        let h = ctl.submit(tx).unwrap();
        ctl.advance(&h, Executed).unwrap();
        if keep {
            ctl.advance(&h, Finalized).unwrap();
            model.apply(target, &payload);
        } else {
            ctl.advance(&h, Reversed).unwrap();
            ctl.advance(&h, Dropped).unwrap();
        }
        prop_assert_eq!(&fold_of(&ctl), &model);
    }
    Ok(())
}

pub fn event_contract_case(states: Vec<LifecycleState>, k: u64) -> Result<(), TestCaseError> {
    let mut ctl = Controller::new(ControllerConfig { confirmations: k, ..Default::default() }, Default::default());
    let tx = Transaction::new(Address::derive("s"), 0, Address::derive("c"), vec![StateOp::set("a", "1")], None);
    let h = ctl.enqueue(tx).unwrap();
    for s in &states[1..] {
        ctl.advance(&h, *s).unwrap();
    }
    let got: Vec<String> = ctl.bus().events_for(&h).iter().map(render_event).collect();
    if states[..] == [Created, Pending, Dropped] {
        prop_assert_eq!(got.len(), 1);
    }
    prop_assert_eq!(got, expected_events(h, &states, k));
    prop_assert_eq!(ctl.trace(&h).unwrap().states(), states.clone());
    prop_assert!(TraversalPlan::new(states).is_ok());
    Ok(())
}
