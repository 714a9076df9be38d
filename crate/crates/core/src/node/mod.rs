//! The DApp-facing node surface.

pub mod events;
pub mod protocol;
pub mod rpc;
pub mod server;

pub use events::{ChainEvent, Delivery, EventBus, EventFilter, EventKind, ReceiptStatus, Subscription};
pub use protocol::{Request, Response, PROTOCOL_VERSION};
pub use rpc::{
    rpc_get_state, rpc_get_transaction_status, rpc_submit_transaction, RpcError, StateResponse, SubmitMode,
    SubmitResponse, TxStatus,
};
pub use server::StreamServer;
