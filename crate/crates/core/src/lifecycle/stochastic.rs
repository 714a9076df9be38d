//! Randomized block ticks calibrated to observed mainnet traffic.
//!
//! A reorganization every 24.43 blocks on average gives the default reorg
//! probability; roughly half of the submitted transactions being executed
//! per block gives the default execution probability.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::controller::Controller;
use super::model::TransitionRecord;
use crate::chain::{Address, TxHash};

pub const MEAN_BLOCKS_BETWEEN_REORGS: f64 = 24.43;

fn default_reorg() -> f64 {
    1.0 / MEAN_BLOCKS_BETWEEN_REORGS
}

fn default_execution() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StochasticProfile {
    #[serde(default = "default_reorg")]
    pub reorg_probability_per_block: f64,
    #[serde(default)]
    pub drop_probability_per_tick: f64,
    #[serde(default = "default_execution")]
    pub execution_probability_per_block: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl Default for StochasticProfile {
    fn default() -> Self {
        StochasticProfile {
            reorg_probability_per_block: default_reorg(),
            drop_probability_per_tick: 0.0,
            execution_probability_per_block: default_execution(),
            rng_seed: 0,
        }
    }
}

impl StochasticProfile {
    pub fn quiet(seed: u64) -> Self {
        StochasticProfile {
            reorg_probability_per_block: 0.0,
            drop_probability_per_tick: 0.0,
            execution_probability_per_block: 0.0,
            rng_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [
            ("reorg_probability_per_block", self.reorg_probability_per_block),
            ("drop_probability_per_tick", self.drop_probability_per_tick),
            ("execution_probability_per_block", self.execution_probability_per_block),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoakStats {
    pub ticks: u64,
    pub blocks_mined: u64,
    pub reorgs: u64,
    pub reversed: u64,
    pub dropped: u64,
    pub executed: u64,
    pub finalized: u64,
}

/// Seeded source of randomness for [`Controller::stochastic_step`].
#[derive(Clone, Debug)]
pub struct StochasticDriver {
    profile: StochasticProfile,
    rng: ChaCha8Rng,
    stats: SoakStats,
}

impl StochasticDriver {
    pub fn new(profile: StochasticProfile) -> Result<Self, String> {
        profile.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(profile.rng_seed);
        Ok(StochasticDriver { profile, rng, stats: SoakStats::default() })
    }

    pub fn profile(&self) -> &StochasticProfile {
        &self.profile
    }

    pub fn stats(&self) -> &SoakStats {
        &self.stats
    }

    /// Draw shared with callers that need randomness from the same stream.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub(crate) fn step(&mut self, ctl: &mut Controller) -> Vec<TransitionRecord> {
        let mut records = Vec::new();
        self.stats.ticks += 1;

        // Execution: each pool transaction independently, nonce order respected.
        let mut next: HashMap<Address, u64> = HashMap::new();
        let mut selected: Vec<TxHash> = Vec::new();
        let candidates: Vec<(TxHash, Address, u64)> =
            ctl.chain().pool().iter().map(|t| (t.hash(), t.sender, t.nonce)).collect();
        for (hash, sender, nonce) in candidates {
            let chosen = self.rng.random_bool(self.profile.execution_probability_per_block);
            let expected = *next.entry(sender).or_insert_with(|| ctl.chain().next_nonce(&sender));
            if chosen && nonce == expected {
                next.insert(sender, expected + 1);
                selected.push(hash);
            }
        }
        let head = ctl.chain().head();
        let mined = ctl.chain_mut().mine_block(head, &selected).expect("selected transactions are minable");
        self.stats.blocks_mined += 1;
        records.extend(ctl.settle(mined.update));

        // Reorganization: orphan the new head with a minimal empty branch.
        if self.rng.random_bool(self.profile.reorg_probability_per_block) {
            let height = ctl.chain().height();
            let report = ctl.chain_mut().reorganize(height, &[]).expect("head is above genesis");
            self.stats.reorgs += 1;
            self.stats.blocks_mined += report.branch.len() as u64;
            records.extend(ctl.settle(report.update));
        }

        // Silent drops among pooled transactions.
        let pooled = ctl.chain().pool().hashes();
        for hash in pooled {
            if self.rng.random_bool(self.profile.drop_probability_per_tick) {
                if let Some(rec) = ctl.drop_silently(&hash) {
                    records.push(rec);
                }
            }
        }

        records.extend(ctl.finalize_ready());

        for r in &records {
            use super::model::LifecycleState::*;
            match r.to {
                Executed => self.stats.executed += 1,
                Reversed => self.stats.reversed += 1,
                Dropped => self.stats.dropped += 1,
                Finalized => self.stats.finalized += 1,
                _ => {}
            }
        }
        records
    }
}
