//! Link controller: handshake, DATA-over-VOICE arbitration, alternating-bit
//! ARQ and jam-triggered channel diversion.

mod ctrl;
mod frame;
mod hop;

pub use ctrl::{
    Hop, LinkConfig, LinkController, LinkError, NodeState, Phase, RxOutcome, TimeoutOutcome,
    TxQueues,
};
pub use frame::{Frame, FrameError, FrameKind, MAX_PAYLOAD};
pub use hop::HopList;
