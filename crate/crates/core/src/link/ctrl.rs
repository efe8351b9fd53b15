use std::collections::VecDeque;

use super::frame::Frame;
use super::hop::HopList;
use crate::pulse::{self, HandshakeCode, PulseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    Handshaking,
    Connected,
    Diverting,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Idle => "IDLE",
            Phase::Handshaking => "HANDSHAKING",
            Phase::Connected => "CONNECTED",
            Phase::Diverting => "DIVERTING",
        }
    }

    pub fn is_linked(self) -> bool {
        matches!(self, Phase::Connected | Phase::Diverting)
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub address: u8,
    pub phase: Phase,
    pub peer: Option<u8>,
    pub active_channel: usize,
    pub tx_seq: bool,
    pub rx_seq: bool,
}

/// Pending traffic. DATA always wins arbitration over VOICE.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TxQueues {
    pub data: VecDeque<String>,
    pub voice: VecDeque<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkConfig {
    /// Channel used for the handshake and as hop-list position 0.
    pub initial_channel: usize,
    pub channel_count: usize,
    /// Shared key mixed into the hop-list seed.
    pub hop_key: u64,
    /// Consecutive ARQ timeouts that count as a jam indication.
    pub jam_timeouts: u32,
    /// Handshake transmissions before giving up.
    pub handshake_attempts: u32,
    /// When false, jam indications are ignored and the node never hops.
    pub diversion: bool,
    /// Transmissions of one DATA frame before it is dropped. `None` retries
    /// forever, which is what exactly-once delivery needs.
    pub retry_limit: Option<u32>,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            initial_channel: 0,
            channel_count: 26,
            hop_key: 0x5eed,
            jam_timeouts: 3,
            handshake_attempts: 5,
            diversion: true,
            retry_limit: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinkError {
    #[error("node is busy ({0})")]
    Busy(Phase),
    #[error("node cannot connect to its own address {0}")]
    SelfAddress(u8),
    #[error(transparent)]
    Address(#[from] PulseError),
    #[error("node is not connected")]
    NotConnected,
    #[error("handshake failed after {0} attempts")]
    HandshakeFailed(u32),
}

/// A channel change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub from: usize,
    pub to: usize,
}

/// Result of handing a received frame to the controller.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RxOutcome {
    /// Text to show the user, delivered at most once per DATA frame.
    pub delivered: Option<String>,
    pub voice: Option<Vec<u8>>,
    /// Frame to send back (an ACK).
    pub reply: Option<Frame>,
    /// The outstanding DATA frame was acknowledged.
    pub acked: bool,
    /// A DATA frame repeated a sequence bit already delivered.
    pub duplicate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TimeoutOutcome {
    pub retransmit: Option<Frame>,
    pub hop: Option<Hop>,
    /// Frame given up on after `retry_limit` transmissions.
    pub abandoned: Option<Frame>,
}

/// Per-node link state machine. Time-agnostic: the caller owns the timers
/// and reports their expiry.
#[derive(Debug, Clone)]
pub struct LinkController {
    state: NodeState,
    pub queues: TxQueues,
    config: LinkConfig,
    outstanding: Option<Frame>,
    attempts: u32,
    consecutive_timeouts: u32,
    handshake: Option<(HandshakeCode, u32)>,
    hops: Option<HopList>,
    voice_seq: bool,
}

impl LinkController {
    pub fn new(address: u8, config: LinkConfig) -> Result<Self, LinkError> {
        if address == 0 || address > pulse::MAX_ADDRESS {
            return Err(PulseError::InvalidAddress(address).into());
        }
        Ok(LinkController {
            state: NodeState {
                address,
                phase: Phase::Idle,
                peer: None,
                active_channel: config.initial_channel,
                tx_seq: false,
                rx_seq: false,
            },
            queues: TxQueues::default(),
            config,
            outstanding: None,
            attempts: 0,
            consecutive_timeouts: 0,
            handshake: None,
            hops: None,
            voice_seq: false,
        })
    }

    pub fn state(&self) -> &NodeState {
        &self.state
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn channel(&self) -> usize {
        self.state.active_channel
    }

    pub fn config(&self) -> &LinkConfig {
        &self.config
    }

    pub fn outstanding(&self) -> Option<&Frame> {
        self.outstanding.as_ref()
    }

    /// Transmissions of the outstanding frame so far.
    pub fn attempts(&self) -> u32 {
        self.attempts
    }

    pub fn hop_list(&self) -> Option<&HopList> {
        self.hops.as_ref()
    }

    /// True if there is nothing left to send or acknowledge.
    pub fn is_idle(&self) -> bool {
        self.outstanding.is_none() && self.queues.data.is_empty() && self.queues.voice.is_empty()
    }

    pub fn initiate(&mut self, dst: u8) -> Result<HandshakeCode, LinkError> {
        if self.state.phase != Phase::Idle {
            return Err(LinkError::Busy(self.state.phase));
        }
        if dst == self.state.address {
            return Err(LinkError::SelfAddress(dst));
        }
        let code = pulse::build_code(self.state.address, dst, false)?;
        self.state.phase = Phase::Handshaking;
        self.handshake = Some((code, 1));
        Ok(code)
    }

    /// Handshake reply timer expired. Returns the code to resend, or an
    /// error (and back to IDLE) once the attempt budget is spent.
    pub fn handshake_timeout(&mut self) -> Result<HandshakeCode, LinkError> {
        match (&mut self.handshake, self.state.phase) {
            (Some((code, n)), Phase::Handshaking) => {
                if *n < self.config.handshake_attempts {
                    *n += 1;
                    Ok(*code)
                } else {
                    let n = *n;
                    self.handshake = None;
                    self.state.phase = Phase::Idle;
                    Err(LinkError::HandshakeFailed(n))
                }
            }
            _ => Err(LinkError::NotConnected),
        }
    }

    pub fn on_handshake(&mut self, code: &HandshakeCode) -> Option<HandshakeCode> {
        if code.dst() != self.state.address {
            return None;
        }
        if !code.ack() {
            let fresh = match self.state.phase {
                Phase::Idle => true,
                // our reply was lost and the peer asked again
                Phase::Connected | Phase::Diverting => {
                    if self.state.peer != Some(code.src()) {
                        return None;
                    }
                    false
                }
                // both sides called each other at once
                Phase::Handshaking => {
                    if self.handshake.map(|(c, _)| c.dst()) != Some(code.src()) {
                        return None;
                    }
                    true
                }
            };
            if fresh {
                self.connect(code.src());
            }
            Some(code.reply())
        } else {
            let expected = self.handshake.map(|(c, _)| c.dst());
            if self.state.phase == Phase::Handshaking && expected == Some(code.src()) {
                self.connect(code.src());
            }
            None
        }
    }

    fn connect(&mut self, peer: u8) {
        self.state.phase = Phase::Connected;
        self.state.peer = Some(peer);
        self.state.tx_seq = false;
        self.state.rx_seq = false;
        self.handshake = None;
        let hops = HopList::new(
            self.config.hop_key,
            self.state.address,
            peer,
            self.state.active_channel,
            self.config.channel_count,
        );
        self.state.active_channel = hops.current();
        self.hops = Some(hops);
    }

    /// Arbitration. While a DATA frame is unacknowledged nothing new is
    /// released; otherwise queued DATA goes before VOICE.
    pub fn next_frame(&mut self) -> Result<Option<Frame>, LinkError> {
        if !self.state.phase.is_linked() {
            return Err(LinkError::NotConnected);
        }
        if self.outstanding.is_some() {
            return Ok(None);
        }
        if let Some(text) = self.queues.data.pop_front() {
            let f = Frame::Data {
                seq: self.state.tx_seq,
                text,
            };
            self.outstanding = Some(f.clone());
            self.attempts = 1;
            return Ok(Some(f));
        }
        if let Some(chunk) = self.queues.voice.pop_front() {
            let f = Frame::Voice {
                seq: self.voice_seq,
                chunk,
            };
            self.voice_seq = !self.voice_seq;
            return Ok(Some(f));
        }
        Ok(None)
    }

    pub fn on_frame(&mut self, frame: &Frame) -> RxOutcome {
        let mut out = RxOutcome::default();
        if !self.state.phase.is_linked() {
            return out;
        }
        self.state.phase = Phase::Connected;
        match frame {
            Frame::Data { seq, text } => {
                out.reply = Some(Frame::Ack { seq: *seq });
                if *seq == self.state.rx_seq {
                    self.state.rx_seq = !self.state.rx_seq;
                    out.delivered = Some(text.clone());
                } else {
                    out.duplicate = true;
                }
            }
            Frame::Ack { seq } => out.acked = self.on_ack(*seq),
            Frame::Voice { chunk, .. } => out.voice = Some(chunk.clone()),
            Frame::Handshake(_) => {}
        }
        out
    }

    pub fn on_ack(&mut self, seq: bool) -> bool {
        if self.outstanding.is_some() && seq == self.state.tx_seq {
            self.outstanding = None;
            self.attempts = 0;
            self.consecutive_timeouts = 0;
            self.state.tx_seq = !self.state.tx_seq;
            true
        } else {
            false
        }
    }

    /// ARQ timer expired: resend the identical frame. Every
    /// `jam_timeouts` consecutive expiries also count as a jam indication.
    pub fn on_timeout(&mut self) -> TimeoutOutcome {
        let Some(frame) = self.outstanding.clone() else {
            return TimeoutOutcome::default();
        };
        self.consecutive_timeouts += 1;
        if self.config.retry_limit.is_some_and(|l| self.attempts >= l) {
            // the sequence bit is kept: a peer that never saw the frame
            // still expects it
            self.outstanding = None;
            self.attempts = 0;
            return TimeoutOutcome {
                abandoned: Some(frame),
                ..Default::default()
            };
        }
        self.attempts += 1;
        let hop = if self.consecutive_timeouts.is_multiple_of(self.config.jam_timeouts.max(1)) {
            self.on_jam_detected()
        } else {
            None
        };
        TimeoutOutcome {
            retransmit: Some(frame),
            hop,
            abandoned: None,
        }
    }

    /// Moves to the next channel of the shared hop list. The outstanding
    /// frame, if any, stays queued for retransmission.
    pub fn on_jam_detected(&mut self) -> Option<Hop> {
        if !self.state.phase.is_linked() || !self.config.diversion {
            return None;
        }
        let hops = self.hops.as_mut()?;
        let from = self.state.active_channel;
        let to = hops.advance();
        self.state.active_channel = to;
        self.state.phase = Phase::Diverting;
        Some(Hop { from, to })
    }
}
