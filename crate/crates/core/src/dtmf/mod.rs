//! Dual-tone character codec.
//!
//! Every character maps to one tone from a low group (699–990 Hz) and one
//! from a high group (1151–1497 Hz). The receiver runs a windowed FFT,
//! picks the strongest peak in each group's band and snaps it to the
//! nearest table frequency; anything more than 5% away from every table
//! frequency is rejected rather than guessed.
//!
//! Streams are framed as 256 ms of tone followed by 64 ms of silence per
//! character, which gives the estimator enough resolution to separate the
//! 11 Hz gap between the 1168 Hz and 1179 Hz rows.

mod codec;
mod spectrum;
mod table;

pub use codec::{
    classify, detect_pair, encode_pair, DecodedStream, DecodedSymbol, DtmfCodec, Framing,
    ToneGroup, DEFAULT_SAMPLE_RATE, DETECTION_RATIO, HIGH_BAND, LOW_BAND, MAX_TWIST, TOLERANCE,
    TONE_AMPLITUDE,
};
pub use spectrum::{spectrum_peaks, SpectralPeak, MIN_ANALYSIS_LEN};
pub use table::{DtmfTable, ToneSymbol, HIGH_TONES, LOW_TONES};

use crate::signal::SampleBuffer;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DtmfError {
    #[error("character {0:?} is not in the DTMF table")]
    UnknownCharacter(char),
    #[error("characters not in the DTMF table: {0:?}")]
    UnknownCharacters(Vec<char>),
    #[error("buffer of {len} samples is shorter than the {min}-sample minimum")]
    BufferTooShort { len: usize, min: usize },
    #[error("symbol of {samples} samples is shorter than the {min}-sample minimum")]
    SymbolTooShort { samples: usize, min: usize },
    #[error("sample rate {0} Hz is below 8000 Hz")]
    SampleRateTooLow(f64),
    #[error("no {0} tone detected")]
    NoPeak(ToneGroup),
    #[error("{group} tone at {measured:.1} Hz is more than 5% from nearest table tone {nearest} Hz")]
    OutOfTolerance {
        group: ToneGroup,
        measured: f64,
        nearest: u32,
    },
    #[error("tone pair ({0} Hz, {1} Hz) is not assigned to a character")]
    UnassignedPair(u32, u32),
    #[error("DTMF table line {line}: {reason}")]
    TableFormat { line: usize, reason: String },
    #[error("duplicate character {0:?} in DTMF table")]
    DuplicateCharacter(char),
    #[error("duplicate tone pair ({0} Hz, {1} Hz) in DTMF table")]
    DuplicatePair(u32, u32),
}

/// Encodes `c` with the standard table.
pub fn encode_char(c: char, symbol_duration: f64, sample_rate: f64) -> Result<SampleBuffer, DtmfError> {
    DtmfCodec::default().encode_char(c, symbol_duration, sample_rate)
}

/// Decodes one symbol period with the standard table.
pub fn decode_symbol(buf: &SampleBuffer) -> Result<char, DtmfError> {
    DtmfCodec::default().decode_symbol(buf)
}

/// Decodes a framed stream with the standard table.
pub fn decode_stream(buf: &SampleBuffer) -> DecodedStream {
    DtmfCodec::default().decode_stream(buf)
}
