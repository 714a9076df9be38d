//! Messages of the streaming protocol: one JSON object per line.
//!
//! Client requests carry an `op` field. Replies carry a `type` field. Pushed
//! events carry an `event` field instead, so a client can tell them apart
//! without tracking request ids.

use serde::{Deserialize, Serialize};

use super::events::EventFilter;
use super::rpc::{StateResponse, TxStatus};
use crate::chain::{Address, TxHash, TxRequest};

pub const PROTOCOL_VERSION: &str = "txforge/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Hello,
    Subscribe {
        filter: EventFilter,
    },
    Submit {
        tx: TxRequest,
    },
    Status {
        tx_hash: TxHash,
    },
    GetState {
        contract: Address,
        #[serde(default)]
        key: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    Hello { protocol: String },
    Subscribed { subscription_id: u64 },
    Submitted { tx_hash: TxHash },
    Status(TxStatus),
    State(StateResponse),
    Error { code: String, message: String },
}

impl Response {
    pub fn hello() -> Self {
        Response::Hello { protocol: PROTOCOL_VERSION.to_string() }
    }

    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Response::Error { code: code.to_string(), message: message.into() }
    }
}
