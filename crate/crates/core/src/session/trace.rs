use std::fmt;

use crate::link::Phase;

/// One state-machine transition, rendered as
/// `<time> <node> <event> <old-phase> <new-phase> <channel>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub time_us: u64,
    pub node: u8,
    pub event: &'static str,
    pub old: Phase,
    pub new: Phase,
    pub channel: usize,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:06} {} {} {} {} {}",
            self.time_us / 1_000_000,
            self.time_us % 1_000_000,
            self.node,
            self.event,
            self.old,
            self.new,
            self.channel
        )
    }
}

/// Things a front end may want to show, in simulation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionEvent {
    Trace(TraceEntry),
    /// Text delivered to `node` by its peer.
    Delivered { time_us: u64, node: u8, text: String },
    /// A voice chunk reached `node`.
    Voice { time_us: u64, node: u8, bytes: usize },
}

/// Per-node counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeStats {
    pub data_sent: u64,
    pub retransmissions: u64,
    pub timeouts: u64,
    pub acks_received: u64,
    pub delivered_chars: u64,
    pub duplicates: u64,
    pub voice_sent: u64,
    pub voice_received: u64,
    pub hops: u64,
    pub jam_alarms: u64,
    pub bad_frames: u64,
    pub abandoned: u64,
    pub collisions: u64,
}

/// Fate of one DATA frame sent by a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataRecord {
    pub first_tx_us: u64,
    pub channel: usize,
    /// Transmissions needed before the ACK arrived.
    pub acked_after: Option<u32>,
    /// Transmission on which the peer accepted the frame.
    pub delivered_after: Option<u32>,
    pub abandoned: bool,
}
