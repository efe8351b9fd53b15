//! Discrete-event simulation of two nodes sharing the simulated medium.
//!
//! Time is an integer count of microseconds. Events at the same instant
//! run in the order they were scheduled, and every random draw comes from
//! one seeded generator, so a given [`SessionConfig`] always produces the
//! same trace.
//!
//! Medium access is a small CSMA scheme: a node with something to send
//! waits 300 µs plus a random number of 50 µs slots and defers while its
//! channel is busy. ACKs and handshake replies go out 200 µs after the
//! frame they answer without sensing. Nodes are half-duplex and
//! overlapping transmissions on one channel destroy each other.

mod trace;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use trace::{DataRecord, NodeStats, SessionEvent, TraceEntry};

use crate::config::{ConfigError, SessionConfig};
use crate::dtmf::{self, DtmfTable};
use crate::link::{Frame, Hop, LinkController, LinkError, Phase};
use crate::phy::{
    channel_transmit, despread, spread, ChannelState, CorrelatorChannel, Despread, HandshakeRadio,
    PnSequence,
};
use crate::pulse::HandshakeCode;
use crate::signal::{dbm_to_linear, linear_to_dbm, SampleBuffer};

pub const TURNAROUND_US: u64 = 200;
pub const DIFS_US: u64 = 300;
pub const SLOT_US: u64 = 50;
pub const CONTENTION_SLOTS: u64 = 8;
/// ARQ and handshake timers run for this multiple of the frame airtime.
pub const TIMEOUT_AIRTIMES: u64 = 4;
/// Voice chunks waiting beyond this are dropped, oldest first.
const VOICE_BACKLOG: usize = 4;
/// Shown in place of a character the receiver could not decode.
pub const ERASURE_MARKER: char = '\u{fffd}';

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error("no node with address {0}")]
    UnknownNode(u8),
    #[error("characters not in the DTMF table: {0:?}")]
    UnknownCharacters(Vec<char>),
}

/// Runtime change to the jammer. Unset fields keep their value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JammerUpdate {
    pub enabled: Option<bool>,
    pub dwell_s: Option<f64>,
    pub power_dbm: Option<f64>,
    /// Start the sweep over from its first visit now.
    pub restart: bool,
}

#[derive(Debug, Clone)]
enum Event {
    Start,
    TryTx(usize),
    SendReply(usize, Frame),
    SendHandshake(usize, HandshakeCode),
    TxEnd(u64),
    AckTimeout(usize, u64),
    HandshakeTimeout(usize, u64),
    Sense(usize),
    VoiceOffer(usize),
    TrafficOffer(usize),
    Input(usize, String),
}

#[derive(Debug)]
struct Scheduled {
    time: u64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

#[derive(Debug, Clone)]
enum Air {
    Frame(Frame),
    Handshake(HandshakeCode),
}

#[derive(Debug, Clone)]
struct Transmission {
    id: u64,
    node: usize,
    channel: usize,
    start: u64,
    end: u64,
    air: Air,
    corrupted: bool,
    /// Sender's record index and attempt number for DATA frames.
    tag: Option<(usize, u32)>,
}

#[derive(Debug)]
struct Node {
    ctrl: LinkController,
    busy_until: u64,
    last_tx_end: u64,
    tuned_at: u64,
    retx: Option<Frame>,
    try_pending: bool,
    ack_token: u64,
    hs_token: u64,
    deferred_hop: bool,
    replies_pending: usize,
    received: String,
    stats: NodeStats,
    records: Vec<DataRecord>,
}

impl Node {
    fn new(ctrl: LinkController) -> Self {
        Node {
            ctrl,
            busy_until: 0,
            last_tx_end: 0,
            tuned_at: 0,
            retx: None,
            try_pending: false,
            ack_token: 0,
            hs_token: 0,
            deferred_hop: false,
            replies_pending: 0,
            received: String::new(),
            stats: NodeStats::default(),
            records: Vec::new(),
        }
    }
}

pub struct Session {
    cfg: SessionConfig,
    now: u64,
    seq: u64,
    queue: BinaryHeap<Reverse<Scheduled>>,
    nodes: [Node; 2],
    medium: ChannelState,
    pn: PnSequence,
    fast: CorrelatorChannel,
    radio: HandshakeRadio,
    rng: ChaCha8Rng,
    air: Vec<Transmission>,
    next_id: u64,
    trace: Vec<TraceEntry>,
    events: VecDeque<SessionEvent>,
    failure: Option<LinkError>,
    pending_inputs: usize,
}

fn us(seconds: f64) -> u64 {
    (seconds * 1e6).round() as u64
}

fn secs(t: u64) -> f64 {
    t as f64 * 1e-6
}

impl Session {
    pub fn new(cfg: SessionConfig) -> Result<Self, SessionError> {
        cfg.validate()?;
        let link = cfg.link_config();
        let pn = cfg.phy.pn().map_err(ConfigError::from)?;
        let jammer = cfg
            .phy
            .sweep_jammer(cfg.seed ^ 0x6a09_e667_f3bc_c908)
            .map_err(ConfigError::from)?;
        let medium = ChannelState::new(cfg.phy.plan.clone(), cfg.initial_channel, cfg.phy.noise_dbm, Some(jammer))
            .map_err(ConfigError::from)?;
        let mut s = Session {
            nodes: [
                Node::new(LinkController::new(cfg.node_a, link.clone())?),
                Node::new(LinkController::new(cfg.node_b, link)?),
            ],
            fast: CorrelatorChannel::new(pn.clone(), cfg.phy.chip_rate),
            radio: cfg.phy.radio(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            pn,
            medium,
            now: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            air: Vec::new(),
            next_id: 0,
            trace: Vec::new(),
            events: VecDeque::new(),
            failure: None,
            pending_inputs: 0,
            cfg,
        };
        s.schedule(0, Event::Start);
        Ok(s)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn now_us(&self) -> u64 {
        self.now
    }

    fn index(&self, address: u8) -> Result<usize, SessionError> {
        self.nodes
            .iter()
            .position(|n| n.ctrl.state().address == address)
            .ok_or(SessionError::UnknownNode(address))
    }

    pub fn node(&self, address: u8) -> Result<&LinkController, SessionError> {
        Ok(&self.nodes[self.index(address)?].ctrl)
    }

    pub fn stats(&self, address: u8) -> Result<&NodeStats, SessionError> {
        Ok(&self.nodes[self.index(address)?].stats)
    }

    /// Text delivered so far to `address`.
    pub fn received(&self, address: u8) -> Result<&str, SessionError> {
        Ok(&self.nodes[self.index(address)?].received)
    }

    /// DATA frames sent by `address`, in order.
    pub fn data_records(&self, address: u8) -> Result<&[DataRecord], SessionError> {
        Ok(&self.nodes[self.index(address)?].records)
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|e| format!("{e}\n")).collect()
    }

    /// Removes and returns everything that happened since the last call.
    pub fn take_events(&mut self) -> Vec<SessionEvent> {
        self.events.drain(..).collect()
    }

    /// Set once the handshake has been abandoned.
    pub fn failure(&self) -> Option<&LinkError> {
        self.failure.as_ref()
    }

    pub fn is_connected(&self) -> bool {
        self.nodes.iter().all(|n| n.ctrl.phase().is_linked())
    }

    pub fn medium(&self) -> &ChannelState {
        &self.medium
    }

    /// Queues `text` for transmission from `address`, one character per
    /// DATA frame.
    pub fn send_text(&mut self, address: u8, text: &str) -> Result<(), SessionError> {
        self.send_text_at(address, self.now, text)
    }

    pub fn send_text_at(&mut self, address: u8, time_us: u64, text: &str) -> Result<(), SessionError> {
        let i = self.index(address)?;
        let table = DtmfTable::standard();
        let unknown: Vec<char> = text.chars().filter(|&c| table.lookup_char(c).is_none()).collect();
        if !unknown.is_empty() {
            return Err(SessionError::UnknownCharacters(unknown));
        }
        self.pending_inputs += 1;
        self.schedule(time_us.max(self.now), Event::Input(i, text.to_string()));
        Ok(())
    }

    /// Applies a jammer change now. Changing the dwell or enabling the
    /// jammer restarts its sweep at the current time.
    pub fn set_jammer(&mut self, update: &JammerUpdate) -> Result<(), SessionError> {
        let now = secs(self.now);
        let plan = self.medium.plan.clone();
        let j = self.medium.jammer.as_mut().expect("session always carries a jammer");
        let mut next = j.clone();
        let mut restart = update.restart;
        if let Some(e) = update.enabled {
            restart |= e && !j.enabled;
            next.enabled = e;
        }
        if let Some(d) = update.dwell_s {
            restart |= d != j.dwell_time;
            next.dwell_time = d;
        }
        if let Some(p) = update.power_dbm {
            next.power_dbm = p;
        }
        if restart {
            next.start_time = now;
        }
        next.validate(&plan).map_err(ConfigError::from)?;
        *j = next;
        Ok(())
    }

    /// Received power per channel in dBm: noise floor, the jammer where it
    /// sits, and any transmission in progress.
    pub fn spectrum(&self) -> Vec<f64> {
        let t = secs(self.now);
        let noise = dbm_to_linear(self.cfg.phy.noise_dbm);
        (0..self.medium.plan.channel_count)
            .map(|c| {
                let mut p = noise;
                if let Some(j) = self.medium.jammer_on(c, t) {
                    p += dbm_to_linear(j.power_dbm);
                }
                for tx in &self.air {
                    if tx.channel == c {
                        p += dbm_to_linear(self.cfg.phy.signal_dbm);
                    }
                }
                linear_to_dbm(p)
            })
            .collect()
    }

    /// Processes the next event. Returns false when none are left.
    pub fn step(&mut self) -> bool {
        let Some(Reverse(s)) = self.queue.pop() else {
            return false;
        };
        self.now = s.time;
        self.handle(s.event);
        true
    }

    /// Runs every event scheduled up to and including `time_us`.
    pub fn run_until(&mut self, time_us: u64) {
        while let Some(Reverse(s)) = self.queue.peek() {
            if s.time > time_us {
                break;
            }
            self.step();
        }
        self.now = self.now.max(time_us);
    }

    /// Runs until all queued text has been acknowledged, the handshake
    /// fails, or `limit_us` is reached. Returns true on the first.
    pub fn run_until_quiet(&mut self, limit_us: u64) -> bool {
        loop {
            if self.failure.is_some() {
                return false;
            }
            let quiet = self.pending_inputs == 0
                && self.is_connected()
                && self
                    .nodes
                    .iter()
                    .all(|n| n.ctrl.outstanding().is_none() && n.ctrl.queues.data.is_empty() && n.retx.is_none());
            if quiet {
                return true;
            }
            match self.queue.peek() {
                Some(Reverse(s)) if s.time <= limit_us => {
                    self.step();
                }
                _ => return false,
            }
        }
    }

    fn schedule(&mut self, time: u64, event: Event) {
        self.seq += 1;
        self.queue.push(Reverse(Scheduled {
            time,
            seq: self.seq,
            event,
        }));
    }

    fn schedule_try(&mut self, n: usize, not_before: u64) {
        if self.nodes[n].try_pending {
            return;
        }
        self.nodes[n].try_pending = true;
        let backoff = DIFS_US + SLOT_US * self.rng.random_range(0..CONTENTION_SLOTS);
        self.schedule(not_before.max(self.now) + backoff, Event::TryTx(n));
    }

    fn log(&mut self, n: usize, event: &'static str, old: Phase) {
        if !self.cfg.trace {
            return;
        }
        let c = &self.nodes[n].ctrl;
        let e = TraceEntry {
            time_us: self.now,
            node: c.state().address,
            event,
            old,
            new: c.phase(),
            channel: c.channel(),
        };
        self.events.push_back(SessionEvent::Trace(e.clone()));
        self.trace.push(e);
    }

    fn handle(&mut self, event: Event) {
        match event {
            Event::Start => {
                let dst = self.nodes[1].ctrl.state().address;
                let old = self.nodes[0].ctrl.phase();
                match self.nodes[0].ctrl.initiate(dst) {
                    Ok(code) => {
                        self.log(0, "initiate", old);
                        self.schedule(self.now, Event::SendHandshake(0, code));
                    }
                    Err(e) => self.failure = Some(e),
                }
            }
            Event::Input(n, text) => {
                self.pending_inputs -= 1;
                for c in text.chars() {
                    self.nodes[n].ctrl.queues.data.push_back(c.to_string());
                }
                self.schedule_try(n, self.now);
            }
            Event::TryTx(n) => self.try_transmit(n),
            Event::SendReply(n, frame) => {
                if self.nodes[n].busy_until > self.now {
                    let at = self.nodes[n].busy_until + TURNAROUND_US;
                    self.schedule(at, Event::SendReply(n, frame));
                    return;
                }
                self.nodes[n].replies_pending -= 1;
                self.start_tx(n, Air::Frame(frame));
            }
            Event::SendHandshake(n, code) => {
                if self.nodes[n].busy_until > self.now {
                    let at = self.nodes[n].busy_until + TURNAROUND_US;
                    self.schedule(at, Event::SendHandshake(n, code));
                    return;
                }
                let old = self.nodes[n].ctrl.phase();
                self.log(n, "handshake_tx", old);
                self.start_tx(n, Air::Handshake(code));
            }
            Event::TxEnd(id) => self.tx_end(id),
            Event::AckTimeout(n, token) => {
                if self.nodes[n].ack_token != token {
                    return;
                }
                let old = self.nodes[n].ctrl.phase();
                let out = self.nodes[n].ctrl.on_timeout();
                if out.abandoned.is_some() {
                    self.nodes[n].stats.abandoned += 1;
                    if let Some(rec) = self.nodes[n].records.last_mut() {
                        rec.abandoned = true;
                    }
                    self.log(n, "abandon", old);
                    self.schedule_try(n, self.now);
                    return;
                }
                if out.retransmit.is_none() {
                    return;
                }
                self.nodes[n].stats.timeouts += 1;
                self.log(n, "timeout", old);
                if let Some(hop) = out.hop {
                    self.after_hop(n, hop, old, "jam_timeouts");
                }
                self.nodes[n].retx = out.retransmit;
                self.schedule_try(n, self.now);
            }
            Event::HandshakeTimeout(n, token) => {
                if self.nodes[n].hs_token != token {
                    return;
                }
                let old = self.nodes[n].ctrl.phase();
                match self.nodes[n].ctrl.handshake_timeout() {
                    Ok(code) => {
                        self.log(n, "handshake_retry", old);
                        let at = self.now + DIFS_US;
                        self.schedule(at, Event::SendHandshake(n, code));
                    }
                    Err(e) => {
                        self.log(n, "handshake_failed", old);
                        self.failure = Some(e);
                    }
                }
            }
            Event::Sense(n) => {
                if !self.nodes[n].ctrl.phase().is_linked() {
                    return;
                }
                let ch = self.nodes[n].ctrl.channel();
                let quiet = self.nodes[n].busy_until <= self.now
                    && self.nodes[n].replies_pending == 0
                    && !self.air.iter().any(|t| t.channel == ch);
                if quiet {
                    let nbits = self.cfg.phy.jam_run_bits;
                    let obs = self.observe(None, nbits, ch, self.now);
                    if self.jam_alarm(&obs) {
                        self.jam_detected(n, "jam_sensed");
                    }
                }
                let at = self.now + self.cfg.sense_interval_us;
                self.schedule(at, Event::Sense(n));
            }
            Event::TrafficOffer(n) => {
                if !self.nodes[n].ctrl.phase().is_linked() {
                    return;
                }
                if let Some(c) = self.cfg.auto_traffic {
                    self.nodes[n].ctrl.queues.data.push_back(c.to_string());
                    self.schedule_try(n, self.now);
                }
                let at = self.now + self.traffic_gap();
                self.schedule(at, Event::TrafficOffer(n));
            }
            Event::VoiceOffer(n) => {
                if !self.nodes[n].ctrl.phase().is_linked() {
                    return;
                }
                let len = self.cfg.voice_chunk_bytes.min(crate::link::MAX_PAYLOAD);
                let chunk: Vec<u8> = (0..len)
                    .map(|i| (128.0 + 100.0 * (i as f64 * 0.7).sin()) as u8)
                    .collect();
                let q = &mut self.nodes[n].ctrl.queues.voice;
                q.push_back(chunk);
                while q.len() > VOICE_BACKLOG {
                    q.pop_front();
                }
                self.schedule_try(n, self.now);
                let at = self.now + self.cfg.voice_interval_us;
                self.schedule(at, Event::VoiceOffer(n));
            }
        }
    }

    /// Gap before the next generated character: uniform on half to one and
    /// a half times the mean, so arrivals do not lock to the jammer.
    fn traffic_gap(&mut self) -> u64 {
        let mean = self.cfg.traffic_interval_us.max(1);
        self.rng.random_range(mean / 2..=mean + mean / 2)
    }

    fn channel_busy_until(&self, ch: usize) -> Option<u64> {
        self.air.iter().filter(|t| t.channel == ch).map(|t| t.end).max()
    }

    fn try_transmit(&mut self, n: usize) {
        self.nodes[n].try_pending = false;
        if !self.nodes[n].ctrl.phase().is_linked() || self.nodes[n].busy_until > self.now {
            return;
        }
        if self.nodes[n].replies_pending > 0 {
            let at = self.now + TURNAROUND_US;
            self.schedule_try(n, at);
            return;
        }
        let ch = self.nodes[n].ctrl.channel();
        if let Some(end) = self.channel_busy_until(ch) {
            self.schedule_try(n, end);
            return;
        }
        let frame = match self.nodes[n].retx.take() {
            Some(f) => {
                self.nodes[n].stats.retransmissions += 1;
                let old = self.nodes[n].ctrl.phase();
                self.log(n, "retransmit", old);
                f
            }
            None => {
                match self.nodes[n].ctrl.next_frame() {
                    Ok(Some(f)) => {
                        let old = self.nodes[n].ctrl.phase();
                        match &f {
                            Frame::Data { .. } => {
                                self.nodes[n].stats.data_sent += 1;
                                self.nodes[n].records.push(DataRecord {
                                    first_tx_us: self.now,
                                    channel: ch,
                                    acked_after: None,
                                    delivered_after: None,
                                    abandoned: false,
                                });
                                self.log(n, "data_tx", old);
                            }
                            Frame::Voice { .. } => {
                                self.nodes[n].stats.voice_sent += 1;
                                self.log(n, "voice_tx", old);
                            }
                            _ => {}
                        }
                        f
                    }
                    _ => return,
                }
            }
        };
        self.start_tx(n, Air::Frame(frame));
    }

    fn airtime_us(&self, air: &Air) -> u64 {
        match air {
            Air::Frame(f) => {
                let chips = f.bit_len() * self.pn.len();
                (chips as f64 / self.cfg.phy.chip_rate * 1e6).ceil() as u64
            }
            Air::Handshake(code) => us(self.radio.airtime(code)),
        }
    }

    fn start_tx(&mut self, n: usize, air: Air) {
        let dur = self.airtime_us(&air);
        let ch = self.nodes[n].ctrl.channel();
        let id = self.next_id;
        self.next_id += 1;
        let mut corrupted = false;
        for other in self.air.iter_mut().filter(|t| t.channel == ch) {
            other.corrupted = true;
            corrupted = true;
        }
        let end = self.now + dur;
        let tag = match &air {
            Air::Frame(Frame::Data { .. }) => self.nodes[n]
                .records
                .len()
                .checked_sub(1)
                .map(|i| (i, self.nodes[n].ctrl.attempts())),
            _ => None,
        };
        self.air.push(Transmission {
            id,
            node: n,
            channel: ch,
            start: self.now,
            end,
            air,
            corrupted,
            tag,
        });
        self.nodes[n].busy_until = end;
        self.nodes[n].last_tx_end = end;
        self.schedule(end, Event::TxEnd(id));
    }

    /// Runs `bits` (or silence when `None`) through the channel as seen on
    /// `channel` starting at `t_us`.
    fn observe(&mut self, bits: Option<&[bool]>, nbits: usize, channel: usize, t_us: u64) -> Despread {
        self.medium.active_channel = channel;
        let t = secs(t_us);
        let (bits, signal_dbm) = match bits {
            Some(b) => (b.to_vec(), self.cfg.phy.signal_dbm),
            None => (vec![true; nbits], f64::NEG_INFINITY),
        };
        if self.cfg.phy.fast {
            return self.fast.transmit(&bits, signal_dbm, &self.medium, t, &mut self.rng);
        }
        let amp = dbm_to_linear(signal_dbm).sqrt();
        let chips: Vec<f64> = spread(&bits, &self.pn).iter().map(|c| c * amp).collect();
        let rx = channel_transmit(
            &SampleBuffer::new(chips, self.cfg.phy.chip_rate),
            &self.medium,
            t,
            &mut self.rng,
        );
        despread(&rx, &self.pn).expect("whole blocks")
    }

    /// Margin below threshold with energy well above the noise floor for
    /// `jam_run_bits` bits in a row.
    fn jam_alarm(&self, obs: &Despread) -> bool {
        let p = &self.cfg.phy;
        let floor = p.energy_ratio * dbm_to_linear(p.noise_dbm);
        let mut run = 0;
        for (m, e) in obs.margins.iter().zip(&obs.energies) {
            if *m < p.margin_threshold && *e > floor {
                run += 1;
                if run >= p.jam_run_bits {
                    return true;
                }
            } else {
                run = 0;
            }
        }
        false
    }

    fn jam_detected(&mut self, n: usize, why: &'static str) {
        if !self.cfg.diversion {
            return;
        }
        self.nodes[n].stats.jam_alarms += 1;
        if self.nodes[n].replies_pending > 0 || self.nodes[n].busy_until > self.now {
            self.nodes[n].deferred_hop = true;
            return;
        }
        let old = self.nodes[n].ctrl.phase();
        if let Some(hop) = self.nodes[n].ctrl.on_jam_detected() {
            self.after_hop(n, hop, old, why);
        }
    }

    fn after_hop(&mut self, n: usize, _hop: Hop, old: Phase, why: &'static str) {
        self.log(n, why, old);
        self.log(n, "hop", old);
        self.nodes[n].stats.hops += 1;
        self.nodes[n].tuned_at = self.now;
        self.schedule_try(n, self.now);
    }

    fn tx_end(&mut self, id: u64) {
        let Some(pos) = self.air.iter().position(|t| t.id == id) else {
            return;
        };
        let tx = self.air.swap_remove(pos);
        let s = tx.node;
        let r = 1 - s;

        // sender side
        match &tx.air {
            Air::Frame(Frame::Data { .. }) => {
                self.nodes[s].ack_token += 1;
                let token = self.nodes[s].ack_token;
                let at = self.now + TIMEOUT_AIRTIMES * (tx.end - tx.start);
                self.schedule(at, Event::AckTimeout(s, token));
            }
            Air::Handshake(code) if !code.ack() => {
                self.nodes[s].hs_token += 1;
                let token = self.nodes[s].hs_token;
                let at = self.now + TIMEOUT_AIRTIMES * (tx.end - tx.start);
                self.schedule(at, Event::HandshakeTimeout(s, token));
            }
            _ => {}
        }
        if std::mem::take(&mut self.nodes[s].deferred_hop) && self.nodes[s].replies_pending == 0 {
            let old = self.nodes[s].ctrl.phase();
            if let Some(hop) = self.nodes[s].ctrl.on_jam_detected() {
                self.after_hop(s, hop, old, "jam_detected");
            }
        }
        if self.nodes[s].ctrl.phase().is_linked() {
            self.schedule_try(s, self.now);
        }

        // receiver side
        let rn = &self.nodes[r];
        let listening = rn.ctrl.channel() == tx.channel && rn.tuned_at <= tx.start && rn.last_tx_end <= tx.start;
        if !listening {
            return;
        }
        if tx.corrupted {
            self.nodes[r].stats.collisions += 1;
            return;
        }
        match tx.air {
            Air::Handshake(code) => self.receive_handshake(r, &code, tx.channel, tx.start),
            Air::Frame(frame) => {
                let bits = frame.to_bits().expect("frames built by the controller serialize");
                let obs = self.observe(Some(&bits), bits.len(), tx.channel, tx.start);
                let jammed = self.jam_alarm(&obs);
                match Frame::from_bits(&obs.bits) {
                    Ok(f) => {
                        if self.receive_frame(r, &f) {
                            if let Some((i, attempt)) = tx.tag {
                                self.nodes[s].records[i].delivered_after.get_or_insert(attempt);
                            }
                        }
                    }
                    Err(_) => self.nodes[r].stats.bad_frames += 1,
                }
                if jammed {
                    self.jam_detected(r, "jam_detected");
                }
            }
        }
    }

    fn receive_handshake(&mut self, r: usize, code: &HandshakeCode, channel: usize, start: u64) {
        let rf = self.radio.transmit(code).expect("radio tones below Nyquist");
        self.medium.active_channel = channel;
        let rx = channel_transmit(&rf, &self.medium, secs(start), &mut self.rng);
        let Ok(got) = self.radio.receive(&rx) else {
            self.nodes[r].stats.bad_frames += 1;
            return;
        };
        let old = self.nodes[r].ctrl.phase();
        let reply = self.nodes[r].ctrl.on_handshake(&got);
        let new = self.nodes[r].ctrl.phase();
        if got.dst() == self.nodes[r].ctrl.state().address {
            self.log(r, "handshake_rx", old);
        }
        if !old.is_linked() && new.is_linked() {
            self.nodes[r].hs_token += 1;
            self.log(r, "connected", old);
            self.on_connected(r);
        }
        if let Some(reply) = reply {
            let at = self.now + TURNAROUND_US;
            self.schedule(at, Event::SendHandshake(r, reply));
        }
    }

    fn on_connected(&mut self, n: usize) {
        self.nodes[n].tuned_at = self.now;
        if self.cfg.sense_interval_us > 0 && self.cfg.diversion {
            let at = self.now + self.cfg.sense_interval_us;
            self.schedule(at, Event::Sense(n));
        }
        if self.cfg.voice_interval_us > 0 {
            let at = self.now + self.cfg.voice_interval_us;
            self.schedule(at, Event::VoiceOffer(n));
        }
        if n == 0 && self.cfg.auto_traffic.is_some() {
            let at = self.now + self.traffic_gap();
            self.schedule(at, Event::TrafficOffer(n));
        }
        self.schedule_try(n, self.now);
    }

    /// Returns true when the frame carried new data for the application.
    fn receive_frame(&mut self, r: usize, frame: &Frame) -> bool {
        let old = self.nodes[r].ctrl.phase();
        let attempts = self.nodes[r].ctrl.attempts();
        let out = self.nodes[r].ctrl.on_frame(frame);
        if let Some(reply) = out.reply {
            self.nodes[r].replies_pending += 1;
            let at = self.now + TURNAROUND_US;
            self.schedule(at, Event::SendReply(r, reply));
        }
        let fresh = out.delivered.is_some();
        if let Some(text) = out.delivered {
            self.log(r, "data_rx", old);
            let shown = if self.cfg.dtmf_audio { render_through_dtmf(&text) } else { text };
            self.nodes[r].stats.delivered_chars += shown.chars().count() as u64;
            self.nodes[r].received.push_str(&shown);
            let node = self.nodes[r].ctrl.state().address;
            self.events.push_back(SessionEvent::Delivered {
                time_us: self.now,
                node,
                text: shown,
            });
        }
        if out.duplicate {
            self.nodes[r].stats.duplicates += 1;
            self.log(r, "duplicate", old);
        }
        if out.acked {
            self.nodes[r].ack_token += 1;
            self.nodes[r].stats.acks_received += 1;
            self.nodes[r].retx = None;
            if let Some(rec) = self.nodes[r].records.last_mut() {
                rec.acked_after = Some(attempts);
            }
            self.log(r, "ack_rx", old);
            self.schedule_try(r, self.now);
        }
        if let Some(v) = out.voice {
            self.nodes[r].stats.voice_received += 1;
            self.log(r, "voice_rx", old);
            let node = self.nodes[r].ctrl.state().address;
            self.events.push_back(SessionEvent::Voice {
                time_us: self.now,
                node,
                bytes: v.len(),
            });
        }
        if old == Phase::Diverting && self.nodes[r].ctrl.phase() == Phase::Connected {
            self.log(r, "restored", old);
        }
        fresh
    }
}

/// Plays each character as a DTMF symbol and decodes it back, the way the
/// receive window shows it.
fn render_through_dtmf(text: &str) -> String {
    text.chars()
        .map(|c| {
            dtmf::encode_char(c, 0.256, dtmf::DEFAULT_SAMPLE_RATE)
                .and_then(|buf| dtmf::decode_symbol(&buf))
                .unwrap_or(ERASURE_MARKER)
        })
        .collect()
}
