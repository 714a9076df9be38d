//! Identifiers, transactions and blocks.
//!
//! Hashes are SHA-256 over a fixed, length-prefixed byte encoding:
//!
//! ```text
//! tx    = "txforge/tx/v1"    || sender[20] || nonce:u64be || target[20]
//!         || op_count:u32be || op*
//! op    = 0x00 || str(key) || str(value)          (set)
//!       | 0x01 || str(key)                        (delete)
//!       | 0x02 || str(key) || amount:i64be        (increment)
//!       | 0x03                                    (fail)
//! str   = len:u32be || utf8 bytes
//! block = "txforge/block/v1" || parent[32] || height:u64be
//!         || tx_count:u32be || tx_hash[32]* || logical_timestamp:u64be
//! ```
//!
//! The tag of a transaction is a reporting label and is not hashed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::ChainError;

/// A 20-byte account or contract address, rendered as `0x`-prefixed lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub const ZERO: Address = Address([0; 20]);

    /// Deterministically derives an address from a label. Used by drivers and fixtures.
    pub fn derive(label: &str) -> Address {
        let digest = Sha256::digest(format!("txforge/address/{label}").as_bytes());
        let mut out = [0u8; 20];
        out.copy_from_slice(&digest[..20]);
        Address(out)
    }
}

/// A 32-byte SHA-256 digest identifying a transaction or a block.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct H256(pub [u8; 32]);

impl H256 {
    pub const ZERO: H256 = H256([0; 32]);

    /// First four bytes as hex, for logs and narratives.
    pub fn short(&self) -> String {
        format!("0x{}", hex::encode(&self.0[..4]))
    }
}

pub type TxHash = H256;
pub type BlockHash = H256;

fn parse_hex<const N: usize>(s: &str) -> Result<[u8; N], ChainError> {
    let body = s.strip_prefix("0x").ok_or_else(|| ChainError::Malformed(format!("missing 0x prefix: {s}")))?;
    if body.len() != N * 2 {
        return Err(ChainError::Malformed(format!("expected {} hex digits, got {}", N * 2, body.len())));
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(body, &mut out).map_err(|e| ChainError::Malformed(e.to_string()))?;
    Ok(out)
}

macro_rules! hex_id {
    ($ty:ident, $n:expr) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "0x{}", hex::encode(self.0))
            }
        }

        impl fmt::Debug for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(self, f)
            }
        }

        impl FromStr for $ty {
            type Err = ChainError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                parse_hex::<$n>(s).map($ty)
            }
        }

        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

hex_id!(Address, 20);
hex_id!(H256, 32);

/// One state operation of a transaction payload.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum StateOp {
    Set {
        key: String,
        value: String,
    },
    Delete {
        key: String,
    },
    Increment {
        key: String,
        amount: i64,
    },
    /// Reverts the whole transaction.
    Fail,
}

impl StateOp {
    pub fn set(key: impl Into<String>, value: impl Into<String>) -> Self {
        StateOp::Set { key: key.into(), value: value.into() }
    }

    pub fn delete(key: impl Into<String>) -> Self {
        StateOp::Delete { key: key.into() }
    }

    pub fn increment(key: impl Into<String>, amount: i64) -> Self {
        StateOp::Increment { key: key.into(), amount }
    }
}

/// The signed-intent fields of a transaction, as submitted by a client.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRequest {
    pub sender: Address,
    pub nonce: u64,
    pub target: Address,
    pub payload: Vec<StateOp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

/// A transaction together with its content hash.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    hash: TxHash,
    pub sender: Address,
    pub nonce: u64,
    pub target: Address,
    pub payload: Vec<StateOp>,
    pub tag: Option<String>,
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_be_bytes());
    buf.extend_from_slice(s.as_bytes());
}

impl Transaction {
    pub fn new(sender: Address, nonce: u64, target: Address, payload: Vec<StateOp>, tag: Option<String>) -> Self {
        let hash = Self::compute_hash(&sender, nonce, &target, &payload);
        Transaction { hash, sender, nonce, target, payload, tag }
    }

    pub fn hash(&self) -> TxHash {
        self.hash
    }

    /// Canonical byte encoding hashed into the transaction id.
    pub fn encode(sender: &Address, nonce: u64, target: &Address, payload: &[StateOp]) -> Vec<u8> {
        let mut buf = Vec::with_capacity(64 + payload.len() * 16);
        buf.extend_from_slice(b"txforge/tx/v1");
        buf.extend_from_slice(&sender.0);
        buf.extend_from_slice(&nonce.to_be_bytes());
        buf.extend_from_slice(&target.0);
        buf.extend_from_slice(&(payload.len() as u32).to_be_bytes());
        for op in payload {
            match op {
                StateOp::Set { key, value } => {
                    buf.push(0);
                    put_str(&mut buf, key);
                    put_str(&mut buf, value);
                }
                StateOp::Delete { key } => {
                    buf.push(1);
                    put_str(&mut buf, key);
                }
                StateOp::Increment { key, amount } => {
                    buf.push(2);
                    put_str(&mut buf, key);
                    buf.extend_from_slice(&amount.to_be_bytes());
                }
                StateOp::Fail => buf.push(3),
            }
        }
        buf
    }

    fn compute_hash(sender: &Address, nonce: u64, target: &Address, payload: &[StateOp]) -> TxHash {
        H256(Sha256::digest(Self::encode(sender, nonce, target, payload)).into())
    }

    pub fn to_request(&self) -> TxRequest {
        TxRequest {
            sender: self.sender,
            nonce: self.nonce,
            target: self.target,
            payload: self.payload.clone(),
            tag: self.tag.clone(),
        }
    }
}

impl From<TxRequest> for Transaction {
    fn from(req: TxRequest) -> Self {
        Transaction::new(req.sender, req.nonce, req.target, req.payload, req.tag)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub hash: BlockHash,
    pub parent_hash: BlockHash,
    pub height: u64,
    pub transactions: Vec<Transaction>,
    pub logical_timestamp: u64,
}

impl Block {
    pub fn genesis() -> Block {
        Block::new(H256::ZERO, 0, Vec::new(), 0)
    }

    pub fn new(parent_hash: BlockHash, height: u64, transactions: Vec<Transaction>, logical_timestamp: u64) -> Block {
        let mut buf = Vec::with_capacity(96 + transactions.len() * 32);
        buf.extend_from_slice(b"txforge/block/v1");
        buf.extend_from_slice(&parent_hash.0);
        buf.extend_from_slice(&height.to_be_bytes());
        buf.extend_from_slice(&(transactions.len() as u32).to_be_bytes());
        for tx in &transactions {
            buf.extend_from_slice(&tx.hash().0);
        }
        buf.extend_from_slice(&logical_timestamp.to_be_bytes());
        let hash = H256(Sha256::digest(&buf).into());
        Block { hash, parent_hash, height, transactions, logical_timestamp }
    }
}
