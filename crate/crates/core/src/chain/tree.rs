//! Append-only block tree with longest-chain fork choice.

use std::collections::HashMap;

use super::types::{Block, BlockHash};

/// Picks the canonical head among `incumbent` and newly appended `candidates`.
///
/// The highest block wins. At equal height the incumbent is kept; among new
/// blocks of equal height the lexicographically smallest hash wins.
pub fn fork_choice(incumbent: (&BlockHash, u64), candidates: &[(BlockHash, u64)]) -> BlockHash {
    let best_new = candidates.iter().max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)));
    match best_new {
        Some((hash, height)) if *height > incumbent.1 => *hash,
        _ => *incumbent.0,
    }
}

#[derive(Clone, Debug)]
pub struct BlockTree {
    blocks: HashMap<BlockHash, Block>,
    genesis: BlockHash,
    canonical_head: BlockHash,
}

impl BlockTree {
    pub fn new() -> Self {
        let genesis = Block::genesis();
        let hash = genesis.hash;
        let mut blocks = HashMap::new();
        blocks.insert(hash, genesis);
        BlockTree { blocks, genesis: hash, canonical_head: hash }
    }

    pub fn genesis(&self) -> BlockHash {
        self.genesis
    }

    pub fn canonical_head(&self) -> BlockHash {
        self.canonical_head
    }

    pub fn get(&self, hash: &BlockHash) -> Option<&Block> {
        self.blocks.get(hash)
    }

    pub fn contains(&self, hash: &BlockHash) -> bool {
        self.blocks.contains_key(hash)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn head_height(&self) -> u64 {
        self.blocks[&self.canonical_head].height
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.values()
    }

    /// Inserts a block whose parent is already present. Returns `true` when
    /// the block became the canonical head.
    pub(crate) fn insert(&mut self, block: Block) -> bool {
        debug_assert!(self.blocks.contains_key(&block.parent_hash));
        let candidate = [(block.hash, block.height)];
        self.blocks.insert(block.hash, block);
        let head = fork_choice((&self.canonical_head, self.head_height()), &candidate);
        let switched = head != self.canonical_head;
        self.canonical_head = head;
        switched
    }

    /// Blocks from `hash` back to genesis, child first.
    pub fn ancestors<'a>(&'a self, hash: &BlockHash) -> impl Iterator<Item = &'a Block> + 'a {
        let mut cursor = self.blocks.get(hash);
        std::iter::from_fn(move || {
            let block = cursor?;
            cursor = if block.height == 0 { None } else { self.blocks.get(&block.parent_hash) };
            Some(block)
        })
    }

    /// Blocks from genesis to `hash`, inclusive.
    pub fn path_from_genesis(&self, hash: &BlockHash) -> Vec<&Block> {
        let mut path: Vec<&Block> = self.ancestors(hash).collect();
        path.reverse();
        path
    }
}

impl Default for BlockTree {
    fn default() -> Self {
        Self::new()
    }
}
