//! Simulated physical layer.
//!
//! Data frames are spread with an m-sequence and sent as antipodal chips,
//! one sample per chip, through a channel that adds white Gaussian noise
//! and, while a sweep jammer sits on the active channel, a jamming tone.
//! Carrier frequencies are never sampled; a channel is just an index into
//! the 902–928 MHz plan.
//!
//! Powers are mean-square amplitudes expressed in dBm with 0 dBm = 1.0.

mod channel;
mod dsss;
mod fast;
mod fsk;
mod pn;
mod radio;

pub use channel::{
    channel_transmit, next_free_channel, ChannelPlan, ChannelState, JamTone, SweepJammer,
};
pub use dsss::{despread, spread, Despread};
pub use fast::CorrelatorChannel;
pub use fsk::{fsk_demodulate, fsk_modulate, SoftBit};
pub use pn::{processing_gain_db, PnSequence};
pub use radio::{fm_discriminate, fm_modulate, HandshakeRadio};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhyError {
    #[error("{freq} Hz is at or above the Nyquist frequency {nyquist} Hz")]
    Aliasing { freq: f64, nyquist: f64 },
    #[error("mark and space frequencies must differ")]
    SameTones,
    #[error("bit rate {0} is not positive or exceeds the sample rate")]
    BadBitRate(f64),
    #[error("{len} chips is not a multiple of the sequence length {n}")]
    LengthNotMultiple { len: usize, n: usize },
    #[error("no m-sequence generator for degree {0}")]
    InvalidDegree(u32),
    #[error("taps {taps:?} do not give a maximal-length sequence of degree {degree}")]
    NotMaximal { degree: u32, taps: Vec<u32> },
    #[error("channel {index} is outside the {count}-channel plan")]
    ChannelOutOfRange { index: usize, count: usize },
    #[error("the jammer occupies every channel")]
    NoFreeChannel,
    #[error("dwell time must be positive, got {0}")]
    InvalidDwell(f64),
    #[error("sweep order must be non-empty")]
    EmptySweep,
    #[error("jammer tone period must be non-negative, got {0}")]
    InvalidTonePeriod(f64),
}
