//! Request/response operations shared by every transport.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Address, BlockHash, ChainError, Transaction, TxHash, TxRequest, Value};
use crate::lifecycle::{Controller, ControllerError, LifecycleState};

/// How a submitted transaction enters the lifecycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmitMode {
    /// Straight into the pool.
    #[default]
    Immediate,
    /// Held at Created until the harness traverses it.
    Queued,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{code}: {message}")]
pub struct RpcError {
    pub code: String,
    pub message: String,
}

impl RpcError {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        RpcError { code: code.into(), message: message.into() }
    }
}

impl From<ControllerError> for RpcError {
    fn from(e: ControllerError) -> Self {
        let code = match &e {
            ControllerError::Chain(ChainError::Rejected(reason)) => reason.to_string(),
            ControllerError::Chain(_) => "chain".to_string(),
            _ => "lifecycle".to_string(),
        };
        RpcError::new(code, e.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub tx_hash: TxHash,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxStatus {
    pub tx_hash: TxHash,
    /// A lifecycle state name, or `unknown`.
    pub lifecycle_state: String,
    pub confirmations: u64,
    pub block_hash: Option<BlockHash>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateResponse {
    pub contract: Address,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    /// Present when a key was asked for; `null` when the key is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Option<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<BTreeMap<String, Value>>,
}

pub fn rpc_submit_transaction(ctl: &mut Controller, req: TxRequest, mode: SubmitMode) -> Result<TxHash, RpcError> {
    let tx = Transaction::from(req);
    Ok(match mode {
        SubmitMode::Immediate => ctl.submit(tx)?,
        SubmitMode::Queued => ctl.enqueue(tx)?,
    })
}

/// Dropped transactions read as `unknown`, the way a node forgets them.
pub fn rpc_get_transaction_status(ctl: &Controller, tx: &TxHash) -> TxStatus {
    let unknown = TxStatus { tx_hash: *tx, lifecycle_state: "unknown".into(), confirmations: 0, block_hash: None };
    let Ok(state) = ctl.current_state(tx) else {
        return unknown;
    };
    if state == LifecycleState::Dropped {
        return unknown;
    }
    let chain = ctl.chain();
    let canonical = chain.is_canonical(tx);
    TxStatus {
        tx_hash: *tx,
        lifecycle_state: state.as_str().to_string(),
        confirmations: if canonical { chain.confirmations(tx).unwrap_or(0) } else { 0 },
        block_hash: if canonical { chain.block_of(tx) } else { None },
    }
}

/// Reads contract storage at the canonical head. Unknown contracts are empty.
pub fn rpc_get_state(ctl: &Controller, contract: &Address, key: Option<&str>) -> StateResponse {
    let state = ctl.chain().state();
    match key {
        Some(k) => StateResponse {
            contract: *contract,
            key: Some(k.to_string()),
            value: Some(state.get(contract, k).cloned()),
            entries: None,
        },
        None => StateResponse {
            contract: *contract,
            key: None,
            value: None,
            entries: Some(state.contract(contract).cloned().unwrap_or_default()),
        },
    }
}
