//! The simulated blockchain.
//!
//! [`Chain`] owns the block tree, the transaction pool and the state at the
//! canonical head. The head state is maintained incrementally with per-block
//! undo journals; [`Chain::compute_state`] recomputes any block's state from
//! genesis and must always agree with it.

mod pool;
mod state;
mod tree;
mod types;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::LogicalClock;

pub use pool::TxPool;
pub use state::{ContractStorage, OnChainState, Value};
pub use tree::{fork_choice, BlockTree};
pub use types::{Address, Block, BlockHash, StateOp, Transaction, TxHash, TxRequest, H256};

use state::Journal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Duplicate,
    AlreadyOnChain,
    NonceTooLow,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RejectReason::Duplicate => "duplicate",
            RejectReason::AlreadyOnChain => "already_on_chain",
            RejectReason::NonceTooLow => "nonce_too_low",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("transaction rejected: {0}")]
    Rejected(RejectReason),
    #[error("unknown block {0}")]
    UnknownBlock(BlockHash),
    #[error("transaction {0} is not in the pool")]
    NotInPool(TxHash),
    #[error("transaction {0} cannot be included here")]
    NotIncludable(TxHash),
    #[error("nonce gap for {sender}: expected {expected}, got {got}")]
    NonceGap { sender: Address, expected: u64, got: u64 },
    #[error("block repeats transaction {0}")]
    DuplicateInBlock(TxHash),
    #[error("cannot orphan the genesis block")]
    CannotOrphanGenesis,
    #[error("fork height {fork_height} is above the canonical height {head_height}")]
    NothingToOrphan { fork_height: u64, head_height: u64 },
    #[error("malformed value: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubmitOutcome {
    Accepted,
    /// The transaction took the `(sender, nonce)` slot of an older one, which
    /// left the pool.
    Replaced(Transaction),
}

/// Effects of a canonical head switch.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChainUpdate {
    /// Blocks that left the canonical chain, highest first.
    pub orphaned: Vec<BlockHash>,
    /// Blocks that joined the canonical chain, lowest first.
    pub connected: Vec<BlockHash>,
    /// Transactions that left the canonical chain and went back to the pool,
    /// with the orphaned block that held them.
    pub reversed: Vec<(TxHash, BlockHash)>,
    /// Transactions in connected blocks, in chain order.
    pub included: Vec<(TxHash, BlockHash)>,
    /// Transactions that left the pool because their nonce slot is gone.
    pub evicted: Vec<TxHash>,
}

impl ChainUpdate {
    fn merge(&mut self, other: ChainUpdate) {
        self.orphaned.extend(other.orphaned);
        self.connected.extend(other.connected);
        self.reversed.retain(|(h, _)| !other.included.iter().any(|(i, _)| i == h));
        self.reversed.extend(other.reversed);
        self.included.extend(other.included);
        self.evicted.extend(other.evicted);
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mined {
    pub block: BlockHash,
    pub update: ChainUpdate,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReorgReport {
    /// Canonical blocks invalidated by the competing branch.
    pub invalidated: Vec<BlockHash>,
    /// Blocks of the competing branch, lowest first.
    pub branch: Vec<BlockHash>,
    /// Transactions returned to the pool.
    pub reversed: Vec<TxHash>,
    pub update: ChainUpdate,
}

#[derive(Clone, Debug)]
struct AppliedBlock {
    journal: Journal,
    statuses: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct Chain {
    tree: BlockTree,
    pool: TxPool,
    state: OnChainState,
    applied: HashMap<BlockHash, AppliedBlock>,
    /// Canonical block hash by height.
    canonical: Vec<BlockHash>,
    /// Canonical block holding each canonical transaction.
    tx_index: HashMap<TxHash, BlockHash>,
    /// Canonical `(height, nonce)` history per sender, ascending.
    nonces: HashMap<Address, Vec<(u64, u64)>>,
    clock: LogicalClock,
}

impl Default for Chain {
    fn default() -> Self {
        Self::new(LogicalClock::new())
    }
}

impl Chain {
    pub fn new(clock: LogicalClock) -> Self {
        let tree = BlockTree::new();
        let genesis = tree.genesis();
        let mut applied = HashMap::new();
        applied.insert(genesis, AppliedBlock { journal: Journal::default(), statuses: vec![] });
        Chain {
            tree,
            pool: TxPool::default(),
            state: OnChainState::default(),
            applied,
            canonical: vec![genesis],
            tx_index: HashMap::new(),
            nonces: HashMap::new(),
            clock,
        }
    }

    pub fn clock(&self) -> &LogicalClock {
        &self.clock
    }

    pub fn tree(&self) -> &BlockTree {
        &self.tree
    }

    pub fn pool(&self) -> &TxPool {
        &self.pool
    }

    /// State at the canonical head.
    pub fn state(&self) -> &OnChainState {
        &self.state
    }

    pub fn head(&self) -> BlockHash {
        self.tree.canonical_head()
    }

    pub fn height(&self) -> u64 {
        self.tree.head_height()
    }

    pub fn canonical_chain(&self) -> &[BlockHash] {
        &self.canonical
    }

    pub fn block(&self, hash: &BlockHash) -> Option<&Block> {
        self.tree.get(hash)
    }

    /// Canonical block containing `tx`, if any.
    pub fn block_of(&self, tx: &TxHash) -> Option<BlockHash> {
        self.tx_index.get(tx).copied()
    }

    pub fn is_canonical(&self, tx: &TxHash) -> bool {
        self.tx_index.contains_key(tx)
    }

    /// Execution status of a canonical transaction.
    pub fn receipt_status(&self, tx: &TxHash) -> Option<bool> {
        let block_hash = self.tx_index.get(tx)?;
        let block = self.tree.get(block_hash)?;
        let idx = block.transactions.iter().position(|t| t.hash() == *tx)?;
        self.applied.get(block_hash).map(|a| a.statuses[idx])
    }

    /// Number of canonical blocks on top of the block containing `tx`.
    pub fn confirmations(&self, tx: &TxHash) -> Option<u64> {
        let block = self.tree.get(self.tx_index.get(tx)?)?;
        Some(self.height() - block.height)
    }

    /// Looks a transaction up in the pool or on the canonical chain.
    pub fn transaction(&self, tx: &TxHash) -> Option<&Transaction> {
        if let Some(t) = self.pool.get(tx) {
            return Some(t);
        }
        let block = self.tree.get(self.tx_index.get(tx)?)?;
        block.transactions.iter().find(|t| t.hash() == *tx)
    }

    /// Next nonce expected from `sender` on the canonical chain.
    pub fn next_nonce(&self, sender: &Address) -> u64 {
        self.canonical_nonce_at(sender, self.height())
    }

    fn canonical_nonce_at(&self, sender: &Address, height: u64) -> u64 {
        self.nonces.get(sender).and_then(|hist| hist.iter().rev().find(|(h, _)| *h <= height)).map_or(0, |(_, n)| n + 1)
    }

    fn is_canonical_block(&self, block: &Block) -> bool {
        self.canonical.get(block.height as usize) == Some(&block.hash)
    }

    /// Next nonce expected from `sender` in a child of `parent`.
    fn nonce_after(&self, parent: &BlockHash, sender: &Address) -> u64 {
        let mut side_max: Option<u64> = None;
        for block in self.tree.ancestors(parent) {
            if self.is_canonical_block(block) {
                return match side_max {
                    Some(n) => n + 1,
                    None => self.canonical_nonce_at(sender, block.height),
                };
            }
            for tx in block.transactions.iter().filter(|t| t.sender == *sender) {
                side_max = Some(side_max.map_or(tx.nonce, |m| m.max(tx.nonce)));
            }
        }
        unreachable!("genesis is canonical")
    }

    pub fn submit(&mut self, tx: Transaction) -> Result<SubmitOutcome, ChainError> {
        if self.tx_index.contains_key(&tx.hash()) {
            return Err(ChainError::Rejected(RejectReason::AlreadyOnChain));
        }
        if self.pool.contains(&tx.hash()) {
            return Err(ChainError::Rejected(RejectReason::Duplicate));
        }
        if tx.nonce < self.next_nonce(&tx.sender) {
            return Err(ChainError::Rejected(RejectReason::NonceTooLow));
        }
        Ok(match self.pool.insert(tx) {
            Some(old) => SubmitOutcome::Replaced(old),
            None => SubmitOutcome::Accepted,
        })
    }

    /// Removes a pending transaction without any trace.
    pub fn drop_tx(&mut self, tx: &TxHash) -> Result<Transaction, ChainError> {
        self.pool.remove(tx).ok_or(ChainError::NotInPool(*tx))
    }

    /// Mines a block of pool transactions on top of `parent`.
    ///
    /// Transactions leave the pool once their block is canonical.
    pub fn mine_block(&mut self, parent: BlockHash, txs: &[TxHash]) -> Result<Mined, ChainError> {
        let body = txs
            .iter()
            .map(|h| self.pool.get(h).cloned().ok_or(ChainError::NotInPool(*h)))
            .collect::<Result<Vec<_>, _>>()?;
        self.append(parent, body)
    }

    fn validate_body(&self, parent: &BlockHash, body: &[Transaction]) -> Result<(), ChainError> {
        if !self.tree.contains(parent) {
            return Err(ChainError::UnknownBlock(*parent));
        }
        let mut expected: HashMap<Address, u64> = HashMap::new();
        let mut seen = HashSet::new();
        for tx in body {
            if !seen.insert(tx.hash()) {
                return Err(ChainError::DuplicateInBlock(tx.hash()));
            }
            let next = expected.entry(tx.sender).or_insert_with(|| self.nonce_after(parent, &tx.sender));
            if tx.nonce != *next {
                return Err(ChainError::NonceGap { sender: tx.sender, expected: *next, got: tx.nonce });
            }
            *next += 1;
        }
        Ok(())
    }

    fn append(&mut self, parent: BlockHash, body: Vec<Transaction>) -> Result<Mined, ChainError> {
        self.validate_body(&parent, &body)?;
        let height = self.tree.get(&parent).map(|b| b.height).unwrap_or_default() + 1;
        let block = Block::new(parent, height, body, self.clock.tick());
        let hash = block.hash;
        let old_head = self.head();
        let update = if self.tree.insert(block) { self.switch_head(old_head, hash) } else { ChainUpdate::default() };
        Ok(Mined { block: hash, update })
    }

    fn switch_head(&mut self, old_head: BlockHash, new_head: BlockHash) -> ChainUpdate {
        let mut branch: Vec<BlockHash> = Vec::new();
        let mut fork_height = 0;
        for block in self.tree.ancestors(&new_head) {
            if self.is_canonical_block(block) {
                fork_height = block.height;
                break;
            }
            branch.push(block.hash);
        }
        branch.reverse();

        let mut update = ChainUpdate::default();
        let mut orphaned_txs: Vec<(Transaction, BlockHash)> = Vec::new();
        debug_assert_eq!(*self.canonical.last().unwrap(), old_head);
        while self.canonical.len() as u64 > fork_height + 1 {
            let hash = self.canonical.pop().unwrap();
            let applied = self.applied.remove(&hash).expect("canonical block has a journal");
            self.state.undo(&applied.journal);
            let block = &self.tree.get(&hash).unwrap();
            for tx in block.transactions.iter().rev() {
                self.tx_index.remove(&tx.hash());
                if let Some(hist) = self.nonces.get_mut(&tx.sender) {
                    hist.pop();
                    if hist.is_empty() {
                        self.nonces.remove(&tx.sender);
                    }
                }
                orphaned_txs.push((tx.clone(), hash));
            }
            update.orphaned.push(hash);
        }

        for hash in branch {
            let block = self.tree.get(&hash).unwrap().clone();
            let mut journal = Journal::default();
            let mut statuses = Vec::with_capacity(block.transactions.len());
            for tx in &block.transactions {
                match self.state.apply_journaled(tx) {
                    Some(j) => {
                        journal.extend(j);
                        statuses.push(true);
                    }
                    None => statuses.push(false),
                }
                self.tx_index.insert(tx.hash(), hash);
                self.nonces.entry(tx.sender).or_default().push((block.height, tx.nonce));
                if self.pool.remove(&tx.hash()).is_none() {
                    if let Some(other) = self.pool.slot(&tx.sender, tx.nonce) {
                        self.pool.remove(&other);
                        update.evicted.push(other);
                    }
                }
                update.included.push((tx.hash(), hash));
            }
            self.applied.insert(hash, AppliedBlock { journal, statuses });
            self.canonical.push(hash);
            update.connected.push(hash);
        }

        // Lowest orphaned transactions first, so re-entry into the pool
        // keeps chain order.
        for (tx, block) in orphaned_txs.into_iter().rev() {
            if self.tx_index.contains_key(&tx.hash()) {
                continue;
            }
            let slot_taken = self.pool.slot(&tx.sender, tx.nonce).is_some() || tx.nonce < self.next_nonce(&tx.sender);
            if slot_taken {
                update.evicted.push(tx.hash());
            } else {
                update.reversed.push((tx.hash(), block));
                self.pool.insert(tx);
            }
        }
        update
    }

    /// Orphans the canonical blocks from `fork_height` up by mining a
    /// strictly longer competing branch on the canonical block at
    /// `fork_height - 1`.
    ///
    /// `competing` lists the transactions of each competing block; missing
    /// blocks are mined empty. Transactions may come from the pool or from
    /// the orphaned segment.
    pub fn reorganize(&mut self, fork_height: u64, competing: &[Vec<TxHash>]) -> Result<ReorgReport, ChainError> {
        let head_height = self.height();
        if fork_height == 0 {
            return Err(ChainError::CannotOrphanGenesis);
        }
        if fork_height > head_height {
            return Err(ChainError::NothingToOrphan { fork_height, head_height });
        }
        let segment: HashMap<TxHash, Transaction> = self.canonical[fork_height as usize..]
            .iter()
            .flat_map(|h| self.tree.get(h).unwrap().transactions.iter())
            .map(|t| (t.hash(), t.clone()))
            .collect();
        let lookup = |h: &TxHash| -> Result<Transaction, ChainError> {
            self.pool.get(h).or_else(|| segment.get(h)).cloned().ok_or(ChainError::NotIncludable(*h))
        };
        let min_len = (head_height - fork_height + 2) as usize;
        let len = competing.len().max(min_len);
        let mut bodies = Vec::with_capacity(len);
        for i in 0..len {
            let body = match competing.get(i) {
                Some(hashes) => hashes.iter().map(lookup).collect::<Result<Vec<_>, _>>()?,
                None => Vec::new(),
            };
            bodies.push(body);
        }

        // Validate the whole branch before touching the tree.
        let mut all = HashSet::new();
        let mut expected: HashMap<Address, u64> = HashMap::new();
        for tx in bodies.iter().flatten() {
            if !all.insert(tx.hash()) {
                return Err(ChainError::DuplicateInBlock(tx.hash()));
            }
            let next =
                expected.entry(tx.sender).or_insert_with(|| self.canonical_nonce_at(&tx.sender, fork_height - 1));
            if tx.nonce != *next {
                return Err(ChainError::NonceGap { sender: tx.sender, expected: *next, got: tx.nonce });
            }
            *next += 1;
        }

        let invalidated = self.canonical[fork_height as usize..].to_vec();
        let mut parent = self.canonical[fork_height as usize - 1];
        let mut branch = Vec::with_capacity(len);
        let mut update = ChainUpdate::default();
        for body in bodies {
            let mined = self.append(parent, body)?;
            update.merge(mined.update);
            parent = mined.block;
            branch.push(mined.block);
        }
        let reversed = update.reversed.iter().map(|(h, _)| *h).collect();
        Ok(ReorgReport { invalidated, branch, reversed, update })
    }

    /// Folds every payload from genesis to `head`. Pure.
    pub fn compute_state(&self, head: &BlockHash) -> Result<OnChainState, ChainError> {
        if !self.tree.contains(head) {
            return Err(ChainError::UnknownBlock(*head));
        }
        let mut state = OnChainState::default();
        for block in self.tree.path_from_genesis(head) {
            for tx in &block.transactions {
                state.apply(tx);
            }
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contract() -> Address {
        Address::derive("contract")
    }

    fn tx(sender: &str, nonce: u64, payload: Vec<StateOp>) -> Transaction {
        Transaction::new(Address::derive(sender), nonce, contract(), payload, None)
    }

    #[test]
    fn submit_into_empty_pool_is_accepted() {
        let mut chain = Chain::default();
        assert_eq!(chain.submit(tx("s", 0, vec![])).unwrap(), SubmitOutcome::Accepted);
    }

    #[test]
    fn same_sender_nonce_replaces() {
        let mut chain = Chain::default();
        let a = tx("s", 0, vec![StateOp::set("k", "a")]);
        let b = tx("s", 0, vec![StateOp::set("k", "b")]);
        chain.submit(a.clone()).unwrap();
        assert_eq!(chain.submit(b.clone()).unwrap(), SubmitOutcome::Replaced(a));
        assert_eq!(chain.pool().hashes(), vec![b.hash()]);
    }

    #[test]
    fn resubmitting_pending_tx_is_rejected() {
        let mut chain = Chain::default();
        let a = tx("s", 0, vec![]);
        chain.submit(a.clone()).unwrap();
        assert_eq!(chain.submit(a.clone()), Err(ChainError::Rejected(RejectReason::Duplicate)));
        let g = chain.head();
        chain.mine_block(g, &[a.hash()]).unwrap();
        assert_eq!(chain.submit(a), Err(ChainError::Rejected(RejectReason::AlreadyOnChain)));
    }

    #[test]
    fn empty_block_leaves_state_unchanged() {
        let mut chain = Chain::default();
        let g = chain.head();
        let mined = chain.mine_block(g, &[]).unwrap();
        assert_eq!(chain.block(&mined.block).unwrap().height, 1);
        assert_eq!(chain.state(), &OnChainState::default());
    }

    #[test]
    fn mined_set_shows_up_in_state() {
        let mut chain = Chain::default();
        let t = tx("s", 0, vec![StateOp::set("k", "v")]);
        chain.submit(t.clone()).unwrap();
        let g = chain.head();
        chain.mine_block(g, &[t.hash()]).unwrap();
        assert_eq!(chain.state().get(&contract(), "k"), Some(&Value::Str("v".into())));
        assert!(chain.pool().is_empty());
    }

    #[test]
    fn mine_errors() {
        let mut chain = Chain::default();
        let g = chain.head();
        assert!(matches!(chain.mine_block(H256([7; 32]), &[]), Err(ChainError::UnknownBlock(_))));
        let t = tx("s", 1, vec![]);
        assert!(matches!(chain.mine_block(g, &[t.hash()]), Err(ChainError::NotInPool(_))));
        chain.submit(t.clone()).unwrap();
        assert!(matches!(chain.mine_block(g, &[t.hash()]), Err(ChainError::NonceGap { expected: 0, got: 1, .. })));
    }

    #[test]
    fn competing_equal_height_keeps_first_seen() {
        let mut chain = Chain::default();
        let g = chain.head();
        let a = chain.mine_block(g, &[]).unwrap().block;
        let b = chain.mine_block(g, &[]).unwrap().block;
        assert_eq!(chain.head(), a);
        let c = chain.mine_block(b, &[]).unwrap();
        assert_eq!(chain.head(), c.block);
        assert_eq!(c.update.orphaned, vec![a]);
        assert_eq!(c.update.connected, vec![b, c.block]);
    }

    #[test]
    fn reorg_without_tx_puts_it_back() {
        let mut chain = Chain::default();
        let t = tx("s", 0, vec![StateOp::set("k", "v")]);
        chain.submit(t.clone()).unwrap();
        let g = chain.head();
        let b1 = chain.mine_block(g, &[t.hash()]).unwrap().block;
        let report = chain.reorganize(1, &[]).unwrap();
        assert_eq!(report.invalidated, vec![b1]);
        assert_eq!(report.branch.len(), 2);
        assert_eq!(report.reversed, vec![t.hash()]);
        assert!(chain.pool().contains(&t.hash()));
        assert_eq!(chain.state(), &OnChainState::default());
        assert_eq!(chain.confirmations(&t.hash()), None);
    }

    #[test]
    fn reorg_reincluding_tx_keeps_it_executed() {
        let mut chain = Chain::default();
        let t = tx("s", 0, vec![StateOp::set("k", "v")]);
        chain.submit(t.clone()).unwrap();
        let g = chain.head();
        chain.mine_block(g, &[t.hash()]).unwrap();
        let report = chain.reorganize(1, &[vec![t.hash()]]).unwrap();
        assert!(report.reversed.is_empty());
        assert!(chain.is_canonical(&t.hash()));
        assert_eq!(chain.block_of(&t.hash()), Some(report.branch[0]));
        assert_eq!(chain.state(), &chain.compute_state(&chain.head()).unwrap());
        assert_eq!(chain.state().get(&contract(), "k"), Some(&Value::Str("v".into())));
    }

    #[test]
    fn reorg_bounds() {
        let mut chain = Chain::default();
        let g = chain.head();
        chain.mine_block(g, &[]).unwrap();
        assert_eq!(chain.reorganize(0, &[]).unwrap_err(), ChainError::CannotOrphanGenesis);
        assert!(matches!(chain.reorganize(2, &[]), Err(ChainError::NothingToOrphan { .. })));
    }

    #[test]
    fn drop_semantics() {
        let mut chain = Chain::default();
        let t = tx("s", 0, vec![]);
        chain.submit(t.clone()).unwrap();
        chain.drop_tx(&t.hash()).unwrap();
        assert!(!chain.pool().contains(&t.hash()));
        chain.submit(t.clone()).unwrap();
        let g = chain.head();
        chain.mine_block(g, &[t.hash()]).unwrap();
        assert_eq!(chain.drop_tx(&t.hash()), Err(ChainError::NotInPool(t.hash())));
    }

    #[test]
    fn compute_state_cases() {
        let mut chain = Chain::default();
        let g = chain.head();
        assert_eq!(chain.compute_state(&g).unwrap(), OnChainState::default());
        assert!(chain.compute_state(&H256([1; 32])).is_err());
        let a = tx("s", 0, vec![StateOp::set("k", "1")]);
        let b = tx("s", 1, vec![StateOp::increment("k", 2)]);
        chain.submit(a.clone()).unwrap();
        chain.submit(b.clone()).unwrap();
        chain.mine_block(g, &[a.hash(), b.hash()]).unwrap();
        let st = chain.compute_state(&chain.head()).unwrap();
        assert_eq!(st.get(&contract(), "k"), Some(&Value::Int(3)));
    }

    #[test]
    fn confirmation_counts() {
        let mut chain = Chain::default();
        let t = tx("s", 0, vec![]);
        chain.submit(t.clone()).unwrap();
        let g = chain.head();
        chain.mine_block(g, &[t.hash()]).unwrap();
        assert_eq!(chain.confirmations(&t.hash()), Some(0));
        for _ in 0..6 {
            let h = chain.head();
            chain.mine_block(h, &[]).unwrap();
        }
        assert_eq!(chain.confirmations(&t.hash()), Some(6));
        let p = tx("p", 0, vec![]);
        chain.submit(p.clone()).unwrap();
        assert_eq!(chain.confirmations(&p.hash()), None);
    }

    #[test]
    fn side_branch_txs_stay_in_pool_until_canonical() {
        let mut chain = Chain::default();
        let g = chain.head();
        chain.mine_block(g, &[]).unwrap();
        let t = tx("s", 0, vec![StateOp::set("k", "v")]);
        chain.submit(t.clone()).unwrap();
        let side = chain.mine_block(g, &[t.hash()]).unwrap();
        assert!(side.update.connected.is_empty());
        assert!(chain.pool().contains(&t.hash()));
        assert!(!chain.is_canonical(&t.hash()));
        let next = chain.mine_block(side.block, &[]).unwrap();
        assert_eq!(next.update.included, vec![(t.hash(), side.block)]);
        assert!(!chain.pool().contains(&t.hash()));
    }

    #[test]
    fn reversed_tx_can_be_replaced() {
        let mut chain = Chain::default();
        let a = tx("s", 0, vec![StateOp::set("k", "a")]);
        chain.submit(a.clone()).unwrap();
        let g = chain.head();
        chain.mine_block(g, &[a.hash()]).unwrap();
        chain.reorganize(1, &[]).unwrap();
        let b = tx("s", 0, vec![StateOp::set("k", "b")]);
        assert_eq!(chain.submit(b).unwrap(), SubmitOutcome::Replaced(a));
    }

    #[test]
    fn failed_tx_occupies_block_with_failed_status() {
        let mut chain = Chain::default();
        let t = tx("s", 0, vec![StateOp::set("k", "v"), StateOp::Fail]);
        chain.submit(t.clone()).unwrap();
        let g = chain.head();
        chain.mine_block(g, &[t.hash()]).unwrap();
        assert_eq!(chain.receipt_status(&t.hash()), Some(false));
        assert_eq!(chain.state(), &OnChainState::default());
    }
}
