use std::collections::HashMap;

use indexmap::IndexMap;

use super::types::{Address, Transaction, TxHash};

/// Transactions awaiting execution, at most one per `(sender, nonce)`.
#[derive(Clone, Debug, Default)]
pub struct TxPool {
    entries: IndexMap<TxHash, Transaction>,
    slots: HashMap<(Address, u64), TxHash>,
}

impl TxPool {
    pub fn contains(&self, hash: &TxHash) -> bool {
        self.entries.contains_key(hash)
    }

    pub fn get(&self, hash: &TxHash) -> Option<&Transaction> {
        self.entries.get(hash)
    }

    pub fn slot(&self, sender: &Address, nonce: u64) -> Option<TxHash> {
        self.slots.get(&(*sender, nonce)).copied()
    }

    /// Inserts `tx`, evicting whatever occupied its `(sender, nonce)` slot.
    pub(crate) fn insert(&mut self, tx: Transaction) -> Option<Transaction> {
        let evicted = self.slot(&tx.sender, tx.nonce).and_then(|old| self.remove(&old));
        self.slots.insert((tx.sender, tx.nonce), tx.hash());
        self.entries.insert(tx.hash(), tx);
        evicted
    }

    pub(crate) fn remove(&mut self, hash: &TxHash) -> Option<Transaction> {
        let tx = self.entries.shift_remove(hash)?;
        self.slots.remove(&(tx.sender, tx.nonce));
        Some(tx)
    }

    /// Pool contents in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Transaction> {
        self.entries.values()
    }

    pub fn hashes(&self) -> Vec<TxHash> {
        self.entries.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
