//! On-chain contract storage and payload application.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::{Address, StateOp, Transaction};

/// A stored value. `set` writes strings, `increment` produces integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl Value {
    /// Integer view used by `increment`. A string counts only when it is the
    /// canonical decimal rendering of an `i64` ("7", "-3"; not "+7" or "07").
    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            Value::Str(s) => s.parse::<i64>().ok().filter(|n| n.to_string() == *s),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

pub type ContractStorage = BTreeMap<String, Value>;

/// Storage of every contract. Contracts with no keys are not represented.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnChainState {
    pub contracts: BTreeMap<Address, ContractStorage>,
}

/// Prior values of every key a transaction touched, in write order.
#[derive(Clone, Debug, Default)]
pub(crate) struct Journal {
    entries: Vec<(Address, String, Option<Value>)>,
}

impl Journal {
    pub(crate) fn extend(&mut self, other: Journal) {
        self.entries.extend(other.entries);
    }
}

impl OnChainState {
    pub fn get(&self, contract: &Address, key: &str) -> Option<&Value> {
        self.contracts.get(contract).and_then(|c| c.get(key))
    }

    pub fn contract(&self, contract: &Address) -> Option<&ContractStorage> {
        self.contracts.get(contract)
    }

    /// Applies a transaction. Returns `true` on success; a failing payload
    /// leaves the state untouched.
    pub fn apply(&mut self, tx: &Transaction) -> bool {
        self.apply_journaled(tx).is_some()
    }

    pub(crate) fn apply_journaled(&mut self, tx: &Transaction) -> Option<Journal> {
        let current = self.contracts.get(&tx.target);
        let mut scratch = current.cloned().unwrap_or_default();
        let mut journal = Journal::default();
        for op in &tx.payload {
            let key = match op {
                StateOp::Fail => return None,
                StateOp::Set { key, .. } | StateOp::Delete { key } | StateOp::Increment { key, .. } => key,
            };
            let prior = current.and_then(|c| c.get(key)).cloned();
            if !journal.entries.iter().any(|(_, k, _)| k == key) {
                journal.entries.push((tx.target, key.clone(), prior));
            }
            match op {
                StateOp::Set { key, value } => {
                    scratch.insert(key.clone(), Value::Str(value.clone()));
                }
                StateOp::Delete { key } => {
                    scratch.remove(key);
                }
                StateOp::Increment { key, amount } => {
                    let base = match scratch.get(key) {
                        None => 0,
                        Some(v) => v.as_integer()?,
                    };
                    scratch.insert(key.clone(), Value::Int(base.checked_add(*amount)?));
                }
                StateOp::Fail => unreachable!(),
            }
        }
        if scratch.is_empty() {
            self.contracts.remove(&tx.target);
        } else {
            self.contracts.insert(tx.target, scratch);
        }
        Some(journal)
    }

    /// Restores the values recorded in `journal`.
    pub(crate) fn undo(&mut self, journal: &Journal) {
        for (contract, key, prior) in journal.entries.iter().rev() {
            match prior {
                Some(v) => {
                    self.contracts.entry(*contract).or_default().insert(key.clone(), v.clone());
                }
                None => {
                    if let Some(storage) = self.contracts.get_mut(contract) {
                        storage.remove(key);
                        if storage.is_empty() {
                            self.contracts.remove(contract);
                        }
                    }
                }
            }
        }
    }
}
