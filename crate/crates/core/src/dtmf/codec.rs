use std::f64::consts::PI;
use std::ops::RangeInclusive;

use super::spectrum::{Spectrum, MIN_ANALYSIS_LEN};
use super::table::{DtmfTable, ToneSymbol, HIGH_TONES, LOW_TONES};
use super::DtmfError;
use crate::signal::SampleBuffer;

/// Amplitude of each of the two sinusoids in a symbol.
pub const TONE_AMPLITUDE: f64 = 0.45;

/// Default audio sample rate, Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 8000.0;

/// Relative frequency error beyond which a detected tone is rejected.
pub const TOLERANCE: f64 = 0.05;

/// Search band for the low-group tone. The two bands meet halfway between
/// the highest low tone and the lowest high tone.
pub const LOW_BAND: RangeInclusive<f64> = 650.0..=1070.0;
/// Search band for the high-group tone.
pub const HIGH_BAND: RangeInclusive<f64> = 1071.0..=1580.0;

/// A band peak must exceed this multiple of the band's median magnitude.
pub const DETECTION_RATIO: f64 = 10.0;

/// A band peak must be within 40 dB of the strongest component.
pub const MAX_TWIST: f64 = 0.01;

/// Which tone group a detection error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToneGroup {
    Low,
    High,
}

impl std::fmt::Display for ToneGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ToneGroup::Low => "low",
            ToneGroup::High => "high",
        })
    }
}

/// Tone and guard lengths used when concatenating symbols into a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Framing {
    /// Tone duration, seconds.
    pub symbol: f64,
    /// Silence after each tone, seconds.
    pub guard: f64,
}

impl Default for Framing {
    /// 2048 samples of tone and 512 samples of silence at 8 kHz.
    fn default() -> Self {
        Framing {
            symbol: 0.256,
            guard: 0.064,
        }
    }
}

/// Encoder/decoder bound to a character table.
#[derive(Debug, Clone)]
pub struct DtmfCodec<'t> {
    table: &'t DtmfTable,
    pub framing: Framing,
}

impl Default for DtmfCodec<'static> {
    fn default() -> Self {
        DtmfCodec::new(DtmfTable::standard())
    }
}

/// One entry of a decoded stream.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSymbol {
    /// Sample offset of the segment within the stream.
    pub start: usize,
    /// Segment length in samples.
    pub len: usize,
    /// The character, or the reason the symbol was erased.
    pub value: Result<char, DtmfError>,
}

impl DecodedSymbol {
    pub fn is_erasure(&self) -> bool {
        self.value.is_err()
    }
}

/// Result of decoding a concatenated stream of symbols.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodedStream {
    pub symbols: Vec<DecodedSymbol>,
}

impl DecodedStream {
    /// Decoded characters with erasures replaced by `marker`.
    pub fn text_with(&self, marker: char) -> String {
        self.symbols
            .iter()
            .map(|s| *s.value.as_ref().unwrap_or(&marker))
            .collect()
    }

    /// Indices (in symbol order) of erased symbols.
    pub fn erasures(&self) -> Vec<usize> {
        self.symbols
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_erasure())
            .map(|(i, _)| i)
            .collect()
    }
}

impl<'t> DtmfCodec<'t> {
    pub fn new(table: &'t DtmfTable) -> Self {
        DtmfCodec {
            table,
            framing: Framing::default(),
        }
    }

    pub fn table(&self) -> &'t DtmfTable {
        self.table
    }

    pub fn encode_char(
        &self,
        c: char,
        symbol_duration: f64,
        sample_rate: f64,
    ) -> Result<SampleBuffer, DtmfError> {
        let sym = self
            .table
            .lookup_char(c)
            .ok_or(DtmfError::UnknownCharacter(c))?;
        encode_pair(sym.low_freq, sym.high_freq, symbol_duration, sample_rate)
    }

    /// Encodes `text` with this codec's framing: each character is a tone
    /// burst followed by a silence guard.
    pub fn encode_text(&self, text: &str, sample_rate: f64) -> Result<SampleBuffer, DtmfError> {
        let unknown: Vec<char> = text
            .chars()
            .filter(|&c| self.table.lookup_char(c).is_none())
            .collect();
        if !unknown.is_empty() {
            return Err(DtmfError::UnknownCharacters(unknown));
        }
        let guard = (self.framing.guard * sample_rate).round() as usize;
        let mut out = SampleBuffer::zeros(0, sample_rate);
        for c in text.chars() {
            out.append(&self.encode_char(c, self.framing.symbol, sample_rate)?);
            out.append(&SampleBuffer::zeros(guard, sample_rate));
        }
        Ok(out)
    }

    /// Classifies one symbol period. Takes the strongest peak in each tone
    /// band, snaps it to the nearest table frequency and rejects it if the
    /// relative error exceeds 5%.
    pub fn decode_symbol(&self, buf: &SampleBuffer) -> Result<char, DtmfError> {
        let (low, high) = detect_pair(buf)?;
        self.table
            .lookup_pair(low, high)
            .map(|s| s.character)
            .ok_or(DtmfError::UnassignedPair(low, high))
    }

    /// Like [`decode_symbol`](Self::decode_symbol) but returns the table entry.
    pub fn decode_tone_symbol(&self, buf: &SampleBuffer) -> Result<ToneSymbol, DtmfError> {
        let (low, high) = detect_pair(buf)?;
        self.table
            .lookup_pair(low, high)
            .copied()
            .ok_or(DtmfError::UnassignedPair(low, high))
    }

    /// Splits `buf` on silence gaps and decodes each segment.
    pub fn decode_stream(&self, buf: &SampleBuffer) -> DecodedStream {
        let symbols = segment(buf)
            .into_iter()
            .map(|(start, end)| DecodedSymbol {
                start,
                len: end - start,
                value: self.decode_symbol(&buf.slice(start..end)),
            })
            .collect();
        DecodedStream { symbols }
    }
}

/// Synthesizes the sum of two equal-amplitude sinusoids.
pub fn encode_pair(
    low_freq: u32,
    high_freq: u32,
    symbol_duration: f64,
    sample_rate: f64,
) -> Result<SampleBuffer, DtmfError> {
    if sample_rate < DEFAULT_SAMPLE_RATE {
        return Err(DtmfError::SampleRateTooLow(sample_rate));
    }
    let n = (symbol_duration * sample_rate).round();
    if !(n >= MIN_ANALYSIS_LEN as f64) {
        return Err(DtmfError::SymbolTooShort {
            samples: n.max(0.0) as usize,
            min: MIN_ANALYSIS_LEN,
        });
    }
    let (wl, wh) = (
        2.0 * PI * low_freq as f64 / sample_rate,
        2.0 * PI * high_freq as f64 / sample_rate,
    );
    let samples = (0..n as usize)
        .map(|i| {
            let t = i as f64;
            TONE_AMPLITUDE * ((wl * t).sin() + (wh * t).sin())
        })
        .collect();
    Ok(SampleBuffer::new(samples, sample_rate))
}

/// Snaps `freq` to the nearest entry of `tones`, enforcing the 5% cap.
pub fn classify(freq: f64, tones: &[u32], group: ToneGroup) -> Result<u32, DtmfError> {
    let nearest = *tones
        .iter()
        .min_by(|a, b| {
            (freq - **a as f64)
                .abs()
                .total_cmp(&(freq - **b as f64).abs())
        })
        .expect("tone group is non-empty");
    let rel = (freq - nearest as f64).abs() / nearest as f64;
    if rel > TOLERANCE {
        return Err(DtmfError::OutOfTolerance {
            group,
            measured: freq,
            nearest,
        });
    }
    Ok(nearest)
}

/// Detects the (low, high) table frequencies present in one symbol.
pub fn detect_pair(buf: &SampleBuffer) -> Result<(u32, u32), DtmfError> {
    let spec = Spectrum::analyze(buf)?;
    let low = band_peak(&spec, LOW_BAND, ToneGroup::Low)?;
    let high = band_peak(&spec, HIGH_BAND, ToneGroup::High)?;
    Ok((
        classify(low, &LOW_TONES, ToneGroup::Low)?,
        classify(high, &HIGH_TONES, ToneGroup::High)?,
    ))
}

fn band_peak(spec: &Spectrum, band: RangeInclusive<f64>, group: ToneGroup) -> Result<f64, DtmfError> {
    let bins = spec.bins(band);
    let best = spec
        .local_maxima(bins.clone())
        .max_by(|&a, &b| spec.magnitude(a).total_cmp(&spec.magnitude(b)))
        .ok_or(DtmfError::NoPeak(group))?;
    let floor = spec.median(bins);
    let peak = spec.magnitude(best);
    if peak < DETECTION_RATIO * floor || peak < MAX_TWIST * spec.max_magnitude() {
        return Err(DtmfError::NoPeak(group));
    }
    Ok(spec.refine(best).frequency)
}

/// Block length for the activity detector, seconds.
const ACTIVITY_BLOCK: f64 = 0.010;
/// Blocks below this fraction of the loudest block's RMS are silence.
const ACTIVITY_RATIO: f64 = 0.25;
/// Streams whose loudest block is below this RMS are treated as silent.
const ACTIVITY_FLOOR: f64 = 1e-3;

/// Finds `[start, end)` sample ranges of tone activity separated by silence.
fn segment(buf: &SampleBuffer) -> Vec<(usize, usize)> {
    let block = ((ACTIVITY_BLOCK * buf.sample_rate()).round() as usize).max(1);
    let rms: Vec<f64> = buf
        .chunks(block)
        .map(|c| (c.iter().map(|s| s * s).sum::<f64>() / c.len() as f64).sqrt())
        .collect();
    let loudest = rms.iter().cloned().fold(0.0, f64::max);
    if loudest < ACTIVITY_FLOOR {
        return Vec::new();
    }
    let threshold = ACTIVITY_RATIO * loudest;

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut current: Option<usize> = None;
    for (i, &r) in rms.iter().enumerate() {
        match (r >= threshold, current) {
            (true, None) => current = Some(i),
            (false, Some(s)) => {
                runs.push((s, i));
                current = None;
            }
            _ => {}
        }
    }
    if let Some(s) = current {
        runs.push((s, rms.len()));
    }

    // bridge single-block dropouts (beating between the two tones)
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(last) if run.0 - last.1 <= 1 => last.1 = run.1,
            _ => merged.push(run),
        }
    }

    merged
        .into_iter()
        .map(|(s, e)| (s * block, (e * block).min(buf.len())))
        .filter(|(s, e)| e - s >= MIN_ANALYSIS_LEN)
        .collect()
}
