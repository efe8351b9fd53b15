use serde::{Deserialize, Serialize};

use crate::session::{JammerUpdate, SessionEvent};

pub const PROTOCOL_VERSION: u32 = 1;

/// One line of the gateway protocol. Serialized as a JSON object whose
/// first two keys are `kind` and `ts` (simulated seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GatewayMessage {
    Hello {
        #[serde(default)]
        ts: f64,
        version: u32,
    },
    /// From a console: text typed at node `from`. From the gateway: text
    /// delivered to `to`.
    ChatText {
        #[serde(default)]
        ts: f64,
        from: u8,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        to: Option<u8>,
        text: String,
    },
    VoiceMarker {
        #[serde(default)]
        ts: f64,
        from: u8,
        to: u8,
        bytes: usize,
    },
    LinkEvent {
        #[serde(default)]
        ts: f64,
        node: u8,
        event: String,
        old: String,
        new: String,
        channel: usize,
    },
    JammerCommand {
        #[serde(default)]
        ts: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        enabled: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dwell_s: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        power_dbm: Option<f64>,
    },
    SpectrumSnapshot {
        #[serde(default)]
        ts: f64,
        /// Received power per channel in dBm.
        channels: Vec<f64>,
        active: usize,
        jammed: Option<usize>,
    },
    Error {
        #[serde(default)]
        ts: f64,
        message: String,
    },
}

impl GatewayMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            GatewayMessage::Hello { .. } => "hello",
            GatewayMessage::ChatText { .. } => "chat_text",
            GatewayMessage::VoiceMarker { .. } => "voice_marker",
            GatewayMessage::LinkEvent { .. } => "link_event",
            GatewayMessage::JammerCommand { .. } => "jammer_command",
            GatewayMessage::SpectrumSnapshot { .. } => "spectrum_snapshot",
            GatewayMessage::Error { .. } => "error",
        }
    }

    /// Single-line JSON, no trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("gateway messages serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        serde_json::from_str(line.trim()).map_err(|e| e.to_string())
    }

    pub fn jammer_update(&self) -> Option<JammerUpdate> {
        match self {
            GatewayMessage::JammerCommand {
                enabled,
                dwell_s,
                power_dbm,
                ..
            } => Some(JammerUpdate {
                enabled: *enabled,
                dwell_s: *dwell_s,
                power_dbm: *power_dbm,
                restart: false,
            }),
            _ => None,
        }
    }

    /// Gateway-side rendering of a session event. `peer` maps a node
    /// address to the other end of the link.
    pub fn from_event(e: &SessionEvent, peer: impl Fn(u8) -> u8) -> Self {
        let secs = |us: u64| us as f64 * 1e-6;
        match e {
            SessionEvent::Trace(t) => GatewayMessage::LinkEvent {
                ts: secs(t.time_us),
                node: t.node,
                event: t.event.to_string(),
                old: t.old.to_string(),
                new: t.new.to_string(),
                channel: t.channel,
            },
            SessionEvent::Delivered { time_us, node, text } => GatewayMessage::ChatText {
                ts: secs(*time_us),
                from: peer(*node),
                to: Some(*node),
                text: text.clone(),
            },
            SessionEvent::Voice { time_us, node, bytes } => GatewayMessage::VoiceMarker {
                ts: secs(*time_us),
                from: peer(*node),
                to: *node,
                bytes: *bytes,
            },
        }
    }
}
