//! Session configuration and its `key = value` file format.
//!
//! ```text
//! # two nodes on the default 26-channel plan
//! node_a = 8
//! node_b = 1
//! seed = 7
//! jammer.enabled = true
//! jammer.dwell_s = 0.1
//! jammer.power_dbm = -5
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are errors.

use std::path::Path;

use crate::link::LinkConfig;
use crate::phy::{ChannelPlan, HandshakeRadio, PhyError, PnSequence, SweepJammer};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("bad value for {key}: {value:?}")]
    BadValue { key: String, value: String },
    #[error("node_a and node_b must differ (both {0})")]
    SameAddress(u8),
    #[error("address {0} outside 1..=63")]
    Address(u8),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JammerConfig {
    pub enabled: bool,
    pub dwell_s: f64,
    pub power_dbm: f64,
    /// `None` sweeps every channel in ascending order.
    pub order: Option<Vec<usize>>,
    pub start_s: f64,
    /// Seconds between tone retunes; 0 keeps one tone per visit.
    pub tone_period_s: f64,
}

impl Default for JammerConfig {
    fn default() -> Self {
        JammerConfig {
            enabled: false,
            dwell_s: 0.1,
            power_dbm: -5.0,
            order: None,
            start_s: 0.0,
            tone_period_s: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhyConfig {
    pub plan: ChannelPlan,
    pub pn_degree: u32,
    /// Overrides the default feedback taps for `pn_degree`.
    pub pn_taps: Option<Vec<u32>>,
    pub chip_rate: f64,
    pub signal_dbm: f64,
    pub noise_dbm: f64,
    pub handshake_mark_hz: f64,
    pub handshake_space_hz: f64,
    /// Despread margin below which a bit counts toward a jam alarm.
    pub margin_threshold: f64,
    /// Consecutive low-margin bits that raise the alarm.
    pub jam_run_bits: usize,
    /// Per-bit energy must exceed this multiple of the noise floor.
    pub energy_ratio: f64,
    /// Use the correlator-domain channel instead of chip-level samples.
    pub fast: bool,
    pub jammer: JammerConfig,
}

impl Default for PhyConfig {
    fn default() -> Self {
        PhyConfig {
            plan: ChannelPlan::default(),
            pn_degree: 7,
            pn_taps: None,
            chip_rate: 1.27e6,
            signal_dbm: -30.0,
            noise_dbm: -50.0,
            handshake_mark_hz: 20_000.0,
            handshake_space_hz: 10_000.0,
            margin_threshold: 0.35,
            jam_run_bits: 8,
            energy_ratio: 10.0,
            fast: false,
            jammer: JammerConfig::default(),
        }
    }
}

impl PhyConfig {
    pub fn pn(&self) -> Result<PnSequence, PhyError> {
        match &self.pn_taps {
            Some(t) => PnSequence::from_taps(self.pn_degree, t),
            None => PnSequence::m_sequence(self.pn_degree),
        }
    }

    pub fn radio(&self) -> HandshakeRadio {
        HandshakeRadio {
            mark_hz: self.handshake_mark_hz,
            space_hz: self.handshake_space_hz,
            signal_dbm: self.signal_dbm,
            ..HandshakeRadio::default()
        }
    }

    pub fn sweep_jammer(&self, seed: u64) -> Result<SweepJammer, PhyError> {
        let j = &self.jammer;
        let jammer = SweepJammer {
            dwell_time: j.dwell_s,
            power_dbm: j.power_dbm,
            sweep_order: j
                .order
                .clone()
                .unwrap_or_else(|| (0..self.plan.channel_count).collect()),
            enabled: j.enabled,
            start_time: j.start_s,
            seed,
            tone_period: j.tone_period_s,
        };
        jammer.validate(&self.plan)?;
        Ok(jammer)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub node_a: u8,
    pub node_b: u8,
    pub seed: u64,
    pub phy: PhyConfig,
    pub initial_channel: usize,
    pub hop_key: u64,
    pub diversion: bool,
    pub handshake_attempts: u32,
    /// DATA transmissions before a frame is dropped; 0 retries forever.
    pub retry_limit: u32,
    /// Offer a voice chunk from each node at this interval; 0 disables.
    pub voice_interval_us: u64,
    pub voice_chunk_bytes: usize,
    /// Channel sensing period while linked; 0 disables.
    pub sense_interval_us: u64,
    /// Receiver renders each delivered character as DTMF audio and
    /// decodes it back before showing it.
    pub dtmf_audio: bool,
    /// Node A generates this character at random intervals averaging
    /// `traffic_interval_us`.
    pub auto_traffic: Option<char>,
    pub traffic_interval_us: u64,
    pub trace: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            node_a: 8,
            node_b: 1,
            seed: 1,
            phy: PhyConfig::default(),
            initial_channel: 0,
            hop_key: 0x5eed,
            diversion: true,
            handshake_attempts: 5,
            retry_limit: 0,
            voice_interval_us: 0,
            voice_chunk_bytes: 8,
            sense_interval_us: 10_000,
            dtmf_audio: true,
            auto_traffic: None,
            traffic_interval_us: 50_000,
            trace: true,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for a in [self.node_a, self.node_b] {
            if a == 0 || a > crate::pulse::MAX_ADDRESS {
                return Err(ConfigError::Address(a));
            }
        }
        if self.node_a == self.node_b {
            return Err(ConfigError::SameAddress(self.node_a));
        }
        self.phy.plan.check(self.initial_channel)?;
        self.phy.pn()?;
        self.phy.sweep_jammer(0)?;
        Ok(())
    }

    pub fn link_config(&self) -> LinkConfig {
        LinkConfig {
            initial_channel: self.initial_channel,
            channel_count: self.phy.plan.channel_count,
            hop_key: self.hop_key,
            jam_timeouts: 3,
            handshake_attempts: self.handshake_attempts,
            diversion: self.diversion,
            retry_limit: (self.retry_limit > 0).then_some(self.retry_limit),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses `text` on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = SessionConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                reason: "expected key = value".into(),
            })?;
            c.set(k.trim(), v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn p<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                value: value.into(),
            })
        }
        fn list(key: &str, value: &str) -> Result<Vec<u32>, ConfigError> {
            value.split(',').map(|s| p(key, s.trim())).collect()
        }
        let phy = &mut self.phy;
        match key {
            "node_a" => self.node_a = p(key, value)?,
            "node_b" => self.node_b = p(key, value)?,
            "seed" => self.seed = p(key, value)?,
            "initial_channel" => self.initial_channel = p(key, value)?,
            "hop_key" => self.hop_key = p(key, value)?,
            "diversion" => self.diversion = p(key, value)?,
            "handshake_attempts" => self.handshake_attempts = p(key, value)?,
            "retry_limit" => self.retry_limit = p(key, value)?,
            "voice_interval_us" => self.voice_interval_us = p(key, value)?,
            "voice_chunk_bytes" => self.voice_chunk_bytes = p(key, value)?,
            "sense_interval_us" => self.sense_interval_us = p(key, value)?,
            "dtmf_audio" => self.dtmf_audio = p(key, value)?,
            "auto_traffic" => {
                self.auto_traffic = if value == "none" { None } else { Some(p(key, value)?) }
            }
            "traffic_interval_us" => self.traffic_interval_us = p(key, value)?,
            "plan.base_mhz" => phy.plan.base_hz = p::<f64>(key, value)? * 1e6,
            "plan.top_mhz" => phy.plan.top_hz = p::<f64>(key, value)? * 1e6,
            "plan.spacing_mhz" => phy.plan.spacing_hz = p::<f64>(key, value)? * 1e6,
            "plan.channels" => phy.plan.channel_count = p(key, value)?,
            "pn.degree" => phy.pn_degree = p(key, value)?,
            "pn.taps" => phy.pn_taps = Some(list(key, value)?),
            "chip_rate" => phy.chip_rate = p(key, value)?,
            "signal_dbm" => phy.signal_dbm = p(key, value)?,
            "noise_dbm" => phy.noise_dbm = p(key, value)?,
            "handshake.mark_hz" => phy.handshake_mark_hz = p(key, value)?,
            "handshake.space_hz" => phy.handshake_space_hz = p(key, value)?,
            "jam.margin_threshold" => phy.margin_threshold = p(key, value)?,
            "jam.run_bits" => phy.jam_run_bits = p(key, value)?,
            "jam.energy_ratio" => phy.energy_ratio = p(key, value)?,
            "phy.fast" => phy.fast = p(key, value)?,
            "jammer.enabled" => phy.jammer.enabled = p(key, value)?,
            "jammer.dwell_s" => phy.jammer.dwell_s = p(key, value)?,
            "jammer.power_dbm" => phy.jammer.power_dbm = p(key, value)?,
            "jammer.start_s" => phy.jammer.start_s = p(key, value)?,
            "jammer.tone_period_s" => phy.jammer.tone_period_s = p(key, value)?,
            "jammer.order" => {
                phy.jammer.order = if value == "ascending" {
                    None
                } else {
                    Some(list(key, value)?.into_iter().map(|c| c as usize).collect())
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }
}
