use crc::{Crc, CRC_16_IBM_3740};

use crate::dtmf::DtmfTable;
use crate::pulse::{self, HandshakeCode};

const CRC16: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

/// Largest payload a frame can carry, in bytes.
pub const MAX_PAYLOAD: usize = 31;

/// Header bits: kind (2), seq (1), length (5).
const HEADER_BITS: usize = 8;
const CRC_BITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    Data,
    Voice,
    Ack,
    Handshake,
}

impl FrameKind {
    fn code(self) -> u8 {
        match self {
            FrameKind::Data => 0,
            FrameKind::Voice => 1,
            FrameKind::Ack => 2,
            FrameKind::Handshake => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::Data => "DATA",
            FrameKind::Voice => "VOICE",
            FrameKind::Ack => "ACK",
            FrameKind::Handshake => "HANDSHAKE",
        }
    }
}

/// A link-layer frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    /// Characters carried as DTMF tone-pair codes, one byte each.
    Data { seq: bool, text: String },
    /// Opaque 8-bit PCM.
    Voice { seq: bool, chunk: Vec<u8> },
    /// Acknowledges the DATA frame with this sequence bit.
    Ack { seq: bool },
    Handshake(HandshakeCode),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error("frame of {0} bits is too short")]
    Truncated(usize),
    #[error("length field says {declared} bytes but {available} bits follow")]
    LengthMismatch { declared: usize, available: usize },
    #[error("checksum mismatch")]
    BadChecksum,
    #[error("payload of {0} bytes exceeds the 31-byte limit")]
    PayloadTooLong(usize),
    #[error("character {0:?} has no DTMF code")]
    UnknownCharacter(char),
    #[error("byte {0:#04x} is not a DTMF code")]
    UnknownCode(u8),
    #[error("malformed handshake payload: {0}")]
    Handshake(#[from] pulse::PulseError),
}

impl Frame {
    pub fn kind(&self) -> FrameKind {
        match self {
            Frame::Data { .. } => FrameKind::Data,
            Frame::Voice { .. } => FrameKind::Voice,
            Frame::Ack { .. } => FrameKind::Ack,
            Frame::Handshake(_) => FrameKind::Handshake,
        }
    }

    pub fn seq(&self) -> bool {
        match self {
            Frame::Data { seq, .. } | Frame::Voice { seq, .. } | Frame::Ack { seq } => *seq,
            Frame::Handshake(_) => false,
        }
    }

    fn payload(&self) -> Result<Vec<u8>, FrameError> {
        let bytes = match self {
            Frame::Data { text, .. } => {
                let table = DtmfTable::standard();
                text.chars()
                    .map(|c| {
                        table
                            .lookup_char(c)
                            .map(|s| s.code())
                            .ok_or(FrameError::UnknownCharacter(c))
                    })
                    .collect::<Result<Vec<u8>, _>>()?
            }
            Frame::Voice { chunk, .. } => chunk.clone(),
            Frame::Ack { .. } => Vec::new(),
            Frame::Handshake(code) => {
                let bits = pulse::serialize_bits(code);
                let v = bits.iter().fold(0u16, |acc, &b| (acc << 1) | b as u16);
                v.to_be_bytes().to_vec()
            }
        };
        if bytes.len() > MAX_PAYLOAD {
            return Err(FrameError::PayloadTooLong(bytes.len()));
        }
        Ok(bytes)
    }

    /// Number of bits on air.
    pub fn bit_len(&self) -> usize {
        HEADER_BITS + 8 * self.payload().map(|p| p.len()).unwrap_or(0) + CRC_BITS
    }

    /// Serializes as `[kind:2][seq:1][len:5][payload][crc16]`, MSB first.
    pub fn to_bits(&self) -> Result<Vec<bool>, FrameError> {
        let payload = self.payload()?;
        let mut bytes = Vec::with_capacity(payload.len() + 3);
        bytes.push((self.kind().code() << 6) | ((self.seq() as u8) << 5) | payload.len() as u8);
        bytes.extend_from_slice(&payload);
        let crc = CRC16.checksum(&bytes);
        bytes.extend_from_slice(&crc.to_be_bytes());
        Ok(bytes
            .iter()
            .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
            .collect())
    }

    pub fn from_bits(bits: &[bool]) -> Result<Frame, FrameError> {
        if bits.len() < HEADER_BITS + CRC_BITS || !bits.len().is_multiple_of(8) {
            return Err(FrameError::Truncated(bits.len()));
        }
        let bytes: Vec<u8> = bits
            .chunks_exact(8)
            .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8))
            .collect();
        let len = (bytes[0] & 0x1f) as usize;
        if bytes.len() != len + 3 {
            return Err(FrameError::LengthMismatch {
                declared: len,
                available: bits.len() - HEADER_BITS - CRC_BITS,
            });
        }
        let (body, crc) = bytes.split_at(len + 1);
        if CRC16.checksum(body) != u16::from_be_bytes([crc[0], crc[1]]) {
            return Err(FrameError::BadChecksum);
        }
        let seq = bytes[0] & 0x20 != 0;
        let payload = &body[1..];
        Ok(match bytes[0] >> 6 {
            0 => {
                let table = DtmfTable::standard();
                let text = payload
                    .iter()
                    .map(|&b| table.lookup_code(b).map(|s| s.character).ok_or(FrameError::UnknownCode(b)))
                    .collect::<Result<String, _>>()?;
                Frame::Data { seq, text }
            }
            1 => Frame::Voice {
                seq,
                chunk: payload.to_vec(),
            },
            2 => Frame::Ack { seq },
            _ => {
                if payload.len() != 2 {
                    return Err(FrameError::LengthMismatch {
                        declared: payload.len(),
                        available: 16,
                    });
                }
                let v = u16::from_be_bytes([payload[0], payload[1]]);
                let bits: Vec<bool> = (0..pulse::CODE_BITS).rev().map(|i| (v >> i) & 1 == 1).collect();
                Frame::Handshake(pulse::parse_hard_bits(&bits)?)
            }
        })
    }
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frame::Data { seq, text } => write!(f, "DATA seq={} {:?}", *seq as u8, text),
            Frame::Voice { seq, chunk } => write!(f, "VOICE seq={} {}B", *seq as u8, chunk.len()),
            Frame::Ack { seq } => write!(f, "ACK seq={}", *seq as u8),
            Frame::Handshake(c) => write!(f, "HANDSHAKE {c}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let frames = [
            Frame::Data {
                seq: true,
                text: "a".into(),
            },
            Frame::Data {
                seq: false,
                text: "Hello, world ~".into(),
            },
            Frame::Voice {
                seq: false,
                chunk: vec![1, 2, 3, 250],
            },
            Frame::Ack { seq: true },
            Frame::Handshake(pulse::build_code(8, 1, false).unwrap()),
        ];
        for fr in frames {
            let bits = fr.to_bits().unwrap();
            assert_eq!(bits.len(), fr.bit_len());
            assert_eq!(Frame::from_bits(&bits), Ok(fr));
        }
    }

    #[test]
    fn single_char_data_is_32_bits() {
        let fr = Frame::Data {
            seq: false,
            text: "x".into(),
        };
        assert_eq!(fr.bit_len(), 32);
        assert_eq!(Frame::Ack { seq: false }.bit_len(), 24);
    }

    #[test]
    fn corruption_detected() {
        let mut bits = Frame::Data {
            seq: false,
            text: "hi".into(),
        }
        .to_bits()
        .unwrap();
        bits[12] = !bits[12];
        assert_eq!(Frame::from_bits(&bits), Err(FrameError::BadChecksum));
        assert!(matches!(Frame::from_bits(&bits[..20]), Err(FrameError::Truncated(20))));
    }

    #[test]
    fn rejects_bad_payloads() {
        let long = Frame::Voice {
            seq: false,
            chunk: vec![0; 32],
        };
        assert_eq!(long.to_bits(), Err(FrameError::PayloadTooLong(32)));
        let tab = Frame::Data {
            seq: false,
            text: "\t".into(),
        };
        assert_eq!(tab.to_bits(), Err(FrameError::UnknownCharacter('\t')));
    }
}
