//! Client-visible chain events and their fan-out to subscribers.
//!
//! There is deliberately no event for a dropped transaction.

use std::sync::mpsc::{self, Receiver, RecvTimeoutError, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::chain::{BlockHash, TxHash};

pub const DEFAULT_SUBSCRIPTION_BUFFER: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiptStatus {
    Success,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ChainEvent {
    /// First entry into the pool.
    TransactionHash {
        tx_hash: TxHash,
    },
    /// Entry into a canonical block.
    Receipt {
        tx_hash: TxHash,
        block_hash: BlockHash,
        status: ReceiptStatus,
    },
    /// A new canonical block on top of the transaction's block.
    Confirmation {
        tx_hash: TxHash,
        count: u64,
    },
    /// The transaction's block was orphaned and it went back to the pool.
    Changed {
        tx_hash: TxHash,
        orphaned_block_hash: BlockHash,
    },
    NewBlock {
        block_hash: BlockHash,
        height: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    TransactionHash,
    Receipt,
    Confirmation,
    Changed,
    NewBlock,
}

impl ChainEvent {
    pub fn kind(&self) -> EventKind {
        match self {
            ChainEvent::TransactionHash { .. } => EventKind::TransactionHash,
            ChainEvent::Receipt { .. } => EventKind::Receipt,
            ChainEvent::Confirmation { .. } => EventKind::Confirmation,
            ChainEvent::Changed { .. } => EventKind::Changed,
            ChainEvent::NewBlock { .. } => EventKind::NewBlock,
        }
    }

    pub fn tx_hash(&self) -> Option<TxHash> {
        match self {
            ChainEvent::TransactionHash { tx_hash }
            | ChainEvent::Receipt { tx_hash, .. }
            | ChainEvent::Confirmation { tx_hash, .. }
            | ChainEvent::Changed { tx_hash, .. } => Some(*tx_hash),
            ChainEvent::NewBlock { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventFilter {
    All,
    Tx { tx_hash: TxHash },
    Event { event: EventKind },
}

impl EventFilter {
    pub fn matches(&self, event: &ChainEvent) -> bool {
        match self {
            EventFilter::All => true,
            EventFilter::Tx { tx_hash } => event.tx_hash() == Some(*tx_hash),
            EventFilter::Event { event: kind } => event.kind() == *kind,
        }
    }
}

/// An event with its position in the global emission order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub seq: u64,
    #[serde(flatten)]
    pub event: ChainEvent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
enum LaggedTag {
    #[serde(rename = "lagged")]
    Lagged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaggedNotice {
    event: LaggedTag,
    pub missed: u64,
}

/// What a subscriber receives: an event, or notice that its buffer overflowed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Delivery {
    Lagged(LaggedNotice),
    Event(EventEnvelope),
}

impl Delivery {
    pub fn lagged(missed: u64) -> Self {
        Delivery::Lagged(LaggedNotice { event: LaggedTag::Lagged, missed })
    }

    pub fn event(&self) -> Option<&ChainEvent> {
        match self {
            Delivery::Event(e) => Some(&e.event),
            Delivery::Lagged(_) => None,
        }
    }
}

struct SubscriberSlot {
    filter: EventFilter,
    sender: SyncSender<Delivery>,
    missed: u64,
}

#[derive(Default)]
struct BusState {
    next_seq: u64,
    next_id: u64,
    subscribers: Vec<(u64, SubscriberSlot)>,
    log: Vec<EventEnvelope>,
}

/// Broadcasts events to subscribers through bounded per-subscriber queues.
///
/// A full queue never blocks the emitter: the overflow is counted and the
/// subscriber gets a [`Delivery::Lagged`] notice in place of the lost events.
#[derive(Clone)]
pub struct EventBus {
    state: Arc<Mutex<BusState>>,
    capacity: usize,
}

impl Default for EventBus {
    fn default() -> Self {
        Self::with_capacity(DEFAULT_SUBSCRIPTION_BUFFER)
    }
}

impl std::fmt::Debug for EventBus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventBus").field("capacity", &self.capacity).finish()
    }
}

impl EventBus {
    pub fn with_capacity(capacity: usize) -> Self {
        EventBus { state: Arc::default(), capacity: capacity.max(1) }
    }

    pub fn subscribe(&self, filter: EventFilter) -> Subscription {
        let (sender, receiver) = mpsc::sync_channel(self.capacity);
        let mut state = self.state.lock().unwrap();
        let id = state.next_id;
        state.next_id += 1;
        state.subscribers.push((id, SubscriberSlot { filter: filter.clone(), sender, missed: 0 }));
        Subscription { id, filter, receiver }
    }

    pub fn emit(&self, event: ChainEvent) {
        let mut state = self.state.lock().unwrap();
        let envelope = EventEnvelope { seq: state.next_seq, event };
        state.next_seq += 1;
        state.subscribers.retain_mut(|(_, slot)| {
            if !slot.filter.matches(&envelope.event) {
                return true;
            }
            if slot.missed > 0 {
                match slot.sender.try_send(Delivery::lagged(slot.missed)) {
                    Ok(()) => slot.missed = 0,
                    Err(TrySendError::Full(_)) => {
                        slot.missed += 1;
                        return true;
                    }
                    Err(TrySendError::Disconnected(_)) => return false,
                }
            }
            match slot.sender.try_send(Delivery::Event(envelope.clone())) {
                Ok(()) => true,
                Err(TrySendError::Full(_)) => {
                    slot.missed += 1;
                    true
                }
                Err(TrySendError::Disconnected(_)) => false,
            }
        });
        state.log.push(envelope);
    }

    /// Every event emitted so far, in order.
    pub fn log(&self) -> Vec<EventEnvelope> {
        self.state.lock().unwrap().log.clone()
    }

    pub fn log_len(&self) -> usize {
        self.state.lock().unwrap().log.len()
    }

    /// Events for one transaction, in emission order.
    pub fn events_for(&self, tx: &TxHash) -> Vec<ChainEvent> {
        let state = self.state.lock().unwrap();
        state.log.iter().filter(|e| e.event.tx_hash() == Some(*tx)).map(|e| e.event.clone()).collect()
    }

    pub fn subscriber_count(&self) -> usize {
        self.state.lock().unwrap().subscribers.len()
    }
}

pub struct Subscription {
    pub id: u64,
    pub filter: EventFilter,
    receiver: Receiver<Delivery>,
}

impl Subscription {
    /// Blocks until the next delivery; `None` once the bus is gone.
    pub fn next_event(&self) -> Option<Delivery> {
        self.receiver.recv().ok()
    }

    pub fn next_timeout(&self, timeout: Duration) -> Result<Delivery, RecvTimeoutError> {
        self.receiver.recv_timeout(timeout)
    }

    pub fn try_next(&self) -> Option<Delivery> {
        self.receiver.try_recv().ok()
    }

    /// Everything currently buffered.
    pub fn drain(&self) -> Vec<Delivery> {
        self.receiver.try_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::H256;

    fn th(b: u8) -> ChainEvent {
        ChainEvent::TransactionHash { tx_hash: H256([b; 32]) }
    }

    #[test]
    fn filters_and_broadcast() {
        let bus = EventBus::default();
        let all1 = bus.subscribe(EventFilter::All);
        let all2 = bus.subscribe(EventFilter::All);
        let one = bus.subscribe(EventFilter::Tx { tx_hash: H256([1; 32]) });
        let blocks = bus.subscribe(EventFilter::Event { event: EventKind::NewBlock });
        bus.emit(th(1));
        bus.emit(ChainEvent::NewBlock { block_hash: H256([9; 32]), height: 1 });
        bus.emit(th(2));
        let a = all1.drain();
        assert_eq!(a.len(), 3);
        assert_eq!(a, all2.drain());
        assert_eq!(one.drain().len(), 1);
        assert_eq!(blocks.drain().len(), 1);
        let seqs: Vec<u64> = a
            .iter()
            .map(|d| match d {
                Delivery::Event(e) => e.seq,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(seqs, vec![0, 1, 2]);
    }

    #[test]
    fn overflow_yields_explicit_lagged_notice() {
        let bus = EventBus::with_capacity(2);
        let sub = bus.subscribe(EventFilter::All);
        for i in 0..5 {
            bus.emit(th(i));
        }
        // Two buffered; three lost.
        let first = sub.drain();
        assert_eq!(first.len(), 2);
        bus.emit(th(9));
        let next = sub.drain();
        assert_eq!(next[0], Delivery::lagged(3));
        assert_eq!(next[1].event(), Some(&th(9)));
    }

    #[test]
    fn dropped_subscriber_is_pruned() {
        let bus = EventBus::default();
        drop(bus.subscribe(EventFilter::All));
        bus.emit(th(0));
        assert_eq!(bus.subscriber_count(), 0);
    }

    #[test]
    fn wire_shapes() {
        let e = EventEnvelope { seq: 4, event: ChainEvent::Confirmation { tx_hash: H256::ZERO, count: 2 } };
        let v = serde_json::to_value(Delivery::Event(e.clone())).unwrap();
        assert_eq!(v["event"], "confirmation");
        assert_eq!(v["seq"], 4);
        let back: Delivery = serde_json::from_value(v).unwrap();
        assert_eq!(back, Delivery::Event(e));
        let lag = serde_json::to_string(&Delivery::lagged(3)).unwrap();
        assert_eq!(lag, r#"{"event":"lagged","missed":3}"#);
        assert_eq!(serde_json::from_str::<Delivery>(&lag).unwrap(), Delivery::lagged(3));
        let f: EventFilter = serde_json::from_str(r#"{"kind":"event","event":"receipt"}"#).unwrap();
        assert_eq!(f, EventFilter::Event { event: EventKind::Receipt });
    }
}
