//! 14-bit handshake code and its pulse-repetition-time line coding.
//!
//! Frame layout, transmitted left to right:
//!
//! ```text
//!  bit:  0      1 ..... 6   7 ..... 12   13
//!       start   src (MSB)   dst (MSB)    ack
//! ```
//!
//! Each bit is one square-wave period at 50% duty cycle: 800 µs for a 1,
//! 600 µs for a 0. The receiver squares the waveform up with a comparator
//! and times the interval between successive pulse leading edges; the
//! comparator inverts, so these are negative edges at its output. A
//! 700 µs threshold separates the two symbols, with a ±10 µs guard band
//! that produces an erasure instead of a guess.

use std::fmt;

use crate::signal::SampleBuffer;

pub const CODE_BITS: usize = 14;
pub const ADDRESS_BITS: usize = 6;
pub const MAX_ADDRESS: u8 = 63;

/// PRT of a 1 bit, µs.
pub const PRT_ONE_US: f64 = 800.0;
/// PRT of a 0 bit, µs.
pub const PRT_ZERO_US: f64 = 600.0;
/// Decision threshold, µs.
pub const PRT_THRESHOLD_US: f64 = 700.0;
/// Half-width of the erasure band around the threshold, µs.
pub const ERASURE_GUARD_US: f64 = 10.0;
/// Width of the pulse that closes the final bit period, µs.
pub const STOP_PULSE_US: f64 = 100.0;

/// Pulse-codec sample rate: one sample per 10 µs counter tick.
pub const PULSE_SAMPLE_RATE: f64 = 100_000.0;
/// Nominal pulse amplitude, volts.
pub const PULSE_AMPLITUDE: f64 = 0.020;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PulseError {
    #[error("address {0} outside 1..=63")]
    InvalidAddress(u8),
    #[error("expected {expected} bits, got {got}")]
    Length { expected: usize, got: usize },
    #[error("start bit is 0")]
    BadStartBit,
    #[error("erasure at bit {0}")]
    ErasurePresent(usize),
    #[error("sample rate {0} Hz does not give integral pulse periods")]
    NonIntegralPrt(f64),
    #[error("fewer than two pulse edges found")]
    NoEdges,
}

/// The 14-bit handshake frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HandshakeCode {
    start: bool,
    src: u8,
    dst: u8,
    ack: bool,
}

impl HandshakeCode {
    pub fn src(&self) -> u8 {
        self.src
    }

    pub fn dst(&self) -> u8 {
        self.dst
    }

    pub fn ack(&self) -> bool {
        self.ack
    }

    pub fn start(&self) -> bool {
        self.start
    }

    /// The reply a responder sends: addresses swapped, ack set.
    pub fn reply(&self) -> HandshakeCode {
        HandshakeCode {
            start: true,
            src: self.dst,
            dst: self.src,
            ack: true,
        }
    }
}

impl fmt::Display for HandshakeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "start={} src={:06b} dst={:06b} ack={}",
            self.start as u8, self.src, self.dst, self.ack as u8
        )
    }
}

fn check_address(a: u8) -> Result<u8, PulseError> {
    if a == 0 || a > MAX_ADDRESS {
        Err(PulseError::InvalidAddress(a))
    } else {
        Ok(a)
    }
}

pub fn build_code(src: u8, dst: u8, ack: bool) -> Result<HandshakeCode, PulseError> {
    Ok(HandshakeCode {
        start: true,
        src: check_address(src)?,
        dst: check_address(dst)?,
        ack,
    })
}

/// `[start][src MSB..LSB][dst MSB..LSB][ack]`, start bit first.
pub fn serialize_bits(code: &HandshakeCode) -> [bool; CODE_BITS] {
    let mut bits = [false; CODE_BITS];
    bits[0] = code.start;
    for i in 0..ADDRESS_BITS {
        bits[1 + i] = (code.src >> (ADDRESS_BITS - 1 - i)) & 1 == 1;
        bits[1 + ADDRESS_BITS + i] = (code.dst >> (ADDRESS_BITS - 1 - i)) & 1 == 1;
    }
    bits[CODE_BITS - 1] = code.ack;
    bits
}

/// Inverse of [`serialize_bits`] for a recovered sequence.
pub fn parse_bits(bits: &[RecoveredBit]) -> Result<HandshakeCode, PulseError> {
    if bits.len() != CODE_BITS {
        return Err(PulseError::Length {
            expected: CODE_BITS,
            got: bits.len(),
        });
    }
    let mut hard = [false; CODE_BITS];
    for (i, b) in bits.iter().enumerate() {
        hard[i] = b.bit().ok_or(PulseError::ErasurePresent(i))?;
    }
    if !hard[0] {
        return Err(PulseError::BadStartBit);
    }
    let field = |off: usize| {
        hard[off..off + ADDRESS_BITS]
            .iter()
            .fold(0u8, |acc, &b| (acc << 1) | b as u8)
    };
    build_code(field(1), field(1 + ADDRESS_BITS), hard[CODE_BITS - 1])
}

/// Convenience for hard bits with no erasures.
pub fn parse_hard_bits(bits: &[bool]) -> Result<HandshakeCode, PulseError> {
    let soft: Vec<RecoveredBit> = bits.iter().map(|&b| RecoveredBit::from(b)).collect();
    parse_bits(&soft)
}

/// One recovered bit. `Erased` marks a period inside the guard band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveredBit {
    Zero,
    One,
    Erased,
}

impl RecoveredBit {
    pub fn bit(self) -> Option<bool> {
        match self {
            RecoveredBit::Zero => Some(false),
            RecoveredBit::One => Some(true),
            RecoveredBit::Erased => None,
        }
    }
}

impl From<bool> for RecoveredBit {
    fn from(b: bool) -> Self {
        if b {
            RecoveredBit::One
        } else {
            RecoveredBit::Zero
        }
    }
}

/// One measured pulse period and its decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrtMeasurement {
    pub period_us: f64,
    pub bit: RecoveredBit,
}

/// Applies the 700 µs decision with its erasure guard band.
pub fn classify_prt(period_us: f64) -> PrtMeasurement {
    let bit = if (period_us - PRT_THRESHOLD_US).abs() <= ERASURE_GUARD_US {
        RecoveredBit::Erased
    } else if period_us > PRT_THRESHOLD_US {
        RecoveredBit::One
    } else {
        RecoveredBit::Zero
    };
    PrtMeasurement { period_us, bit }
}

/// A rendered pulse train.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    pub samples: SampleBuffer,
    pub amplitude: f64,
}

fn samples_per(us: f64, sample_rate: f64) -> Result<usize, PulseError> {
    let n = us * 1e-6 * sample_rate;
    if (n - n.round()).abs() > 1e-9 || n.round() < 2.0 {
        return Err(PulseError::NonIntegralPrt(sample_rate));
    }
    Ok(n.round() as usize)
}

/// Sample positions of every level transition for `bits`: pairs of
/// (rising, falling) edge indices, the last pair being the stop pulse.
/// Returns the edges and the total length in samples.
pub fn pulse_edges(bits: &[bool], sample_rate: f64) -> Result<(Vec<(usize, usize)>, usize), PulseError> {
    let one = samples_per(PRT_ONE_US, sample_rate)?;
    let zero = samples_per(PRT_ZERO_US, sample_rate)?;
    let stop = samples_per(STOP_PULSE_US, sample_rate)?;
    if one % 2 != 0 || zero % 2 != 0 {
        return Err(PulseError::NonIntegralPrt(sample_rate));
    }
    if bits.is_empty() {
        return Ok((Vec::new(), 0));
    }
    let mut edges = Vec::with_capacity(bits.len() + 1);
    let mut t = 0;
    for &b in bits {
        let period = if b { one } else { zero };
        edges.push((t, t + period / 2));
        t += period;
    }
    edges.push((t, t + stop));
    // trailing low so the stop pulse's falling edge is visible
    Ok((edges, t + 2 * stop))
}

/// Renders `bits` as a square wave: each bit high for PRT/2 then low for
/// PRT/2, followed by a short stop pulse that marks the end of the last
/// period. The low level is 0 and the high level is the pulse amplitude.
pub fn encode_pulses(bits: &[bool], sample_rate: f64) -> Result<PulseTrain, PulseError> {
    let (edges, len) = pulse_edges(bits, sample_rate)?;
    Ok(PulseTrain {
        samples: render_edges(&edges, len, sample_rate, PULSE_AMPLITUDE),
        amplitude: PULSE_AMPLITUDE,
    })
}

/// Draws high intervals `[rise, fall)` at `amplitude` over a zero baseline.
pub fn render_edges(edges: &[(usize, usize)], len: usize, sample_rate: f64, amplitude: f64) -> SampleBuffer {
    let mut s = vec![0.0; len];
    for &(rise, fall) in edges {
        for v in &mut s[rise.min(len)..fall.min(len)] {
            *v = amplitude;
        }
    }
    SampleBuffer::new(s, sample_rate)
}

/// Hysteresis of the comparator, as a fraction of the local peak-to-peak
/// swing.
const HYSTERESIS: f64 = 0.1;

/// Recovers bits from a (possibly noisy or sinusoid-shaped) pulse
/// waveform.
///
/// The comparator threshold tracks the midpoint of the running min/max
/// over a window of a few pulse periods, so a DC offset does not matter
/// and neither does the absolute amplitude.
pub fn recover_pulses(analog: &SampleBuffer) -> Result<Vec<PrtMeasurement>, PulseError> {
    let fs = analog.sample_rate();
    let leading = leading_edges(analog);
    if leading.len() < 2 {
        return Err(PulseError::NoEdges);
    }
    Ok(leading
        .windows(2)
        .map(|w| classify_prt((w[1] - w[0]) / fs * 1e6))
        .collect())
}

/// Bits only, for callers that do not need the periods.
pub fn recover_bits(analog: &SampleBuffer) -> Result<Vec<RecoveredBit>, PulseError> {
    Ok(recover_pulses(analog)?.into_iter().map(|m| m.bit).collect())
}

/// Fractional sample positions where the signal rises through the
/// running-midpoint threshold.
fn leading_edges(analog: &SampleBuffer) -> Vec<f64> {
    let n = analog.len();
    if n < 2 {
        return Vec::new();
    }
    let fs = analog.sample_rate();
    let half_window = ((2.0 * PRT_ONE_US * 1e-6 * fs).round() as usize).max(1);
    let (lo, hi) = running_min_max(analog, half_window);

    let mut edges = Vec::new();
    // comparator state: true when the input is above threshold; the line
    // idles low before the first sample
    let mut high = false;
    for i in 0..n {
        let span = hi[i] - lo[i];
        if span <= 0.0 {
            continue;
        }
        let mid = 0.5 * (hi[i] + lo[i]);
        let h = HYSTERESIS * span;
        let x = analog[i];
        if !high && x > mid + h / 2.0 {
            high = true;
            // before the first sample the line sits at the running minimum
            let prev = if i == 0 { lo[0] } else { analog[i - 1] };
            let frac = if x != prev {
                ((mid - prev) / (x - prev)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let pos = i as f64 - 1.0 + frac;
            edges.push(pos);
        } else if high && x < mid - h / 2.0 {
            high = false;
        }
    }
    edges
}

/// Min and max over `[i - w, i + w]` for every `i`.
fn running_min_max(x: &[f64], w: usize) -> (Vec<f64>, Vec<f64>) {
    use std::collections::VecDeque;
    let n = x.len();
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let mut qmin: VecDeque<usize> = VecDeque::new();
    let mut qmax: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let right = (i + w).min(n - 1);
        while next <= right {
            while qmin.back().is_some_and(|&j| x[j] >= x[next]) {
                qmin.pop_back();
            }
            qmin.push_back(next);
            while qmax.back().is_some_and(|&j| x[j] <= x[next]) {
                qmax.pop_back();
            }
            qmax.push_back(next);
            next += 1;
        }
        let left = i.saturating_sub(w);
        while qmin.front().is_some_and(|&j| j < left) {
            qmin.pop_front();
        }
        while qmax.front().is_some_and(|&j| j < left) {
            qmax.pop_front();
        }
        lo[i] = x[*qmin.front().unwrap()];
        hi[i] = x[*qmax.front().unwrap()];
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_str(bits: &[bool]) -> String {
        bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    #[test]
    fn worked_example_layout() {
        let c = build_code(8, 1, false).unwrap();
        assert_eq!(bits_str(&serialize_bits(&c)), "10010000000010");
        let r = c.reply();
        assert_eq!(r, build_code(1, 8, true).unwrap());
        assert_eq!(bits_str(&serialize_bits(&r)), "10000010010001");
    }

    #[test]
    fn address_validation() {
        assert_eq!(build_code(0, 1, false), Err(PulseError::InvalidAddress(0)));
        assert_eq!(build_code(1, 64, false), Err(PulseError::InvalidAddress(64)));
        assert!(build_code(63, 1, true).is_ok());
    }

    #[test]
    fn parse_errors() {
        let mut bits = serialize_bits(&build_code(8, 1, false).unwrap()).to_vec();
        bits[0] = false;
        assert_eq!(parse_hard_bits(&bits), Err(PulseError::BadStartBit));
        assert_eq!(
            parse_hard_bits(&bits[..13]),
            Err(PulseError::Length { expected: 14, got: 13 })
        );
        let mut soft: Vec<RecoveredBit> = serialize_bits(&build_code(8, 1, false).unwrap())
            .iter()
            .map(|&b| b.into())
            .collect();
        soft[5] = RecoveredBit::Erased;
        assert_eq!(parse_bits(&soft), Err(PulseError::ErasurePresent(5)));
        // a zero address can only come from a corrupted frame
        let mut bits = serialize_bits(&build_code(8, 1, false).unwrap());
        bits[1..7].fill(false);
        assert_eq!(parse_hard_bits(&bits), Err(PulseError::InvalidAddress(0)));
    }

    #[test]
    fn single_bits_render() {
        let one = encode_pulses(&[true], PULSE_SAMPLE_RATE).unwrap();
        let s = one.samples.samples();
        assert!(s[..40].iter().all(|&v| v == PULSE_AMPLITUDE));
        assert!(s[40..80].iter().all(|&v| v == 0.0));
        let zero = encode_pulses(&[false], PULSE_SAMPLE_RATE).unwrap();
        let s = zero.samples.samples();
        assert!(s[..30].iter().all(|&v| v == PULSE_AMPLITUDE));
        assert!(s[30..60].iter().all(|&v| v == 0.0));
        // stop pulse starts right after the period
        assert_eq!(s[60], PULSE_AMPLITUDE);
    }

    #[test]
    fn empty_train() {
        let t = encode_pulses(&[], PULSE_SAMPLE_RATE).unwrap();
        assert!(t.samples.is_empty());
        assert_eq!(recover_pulses(&t.samples), Err(PulseError::NoEdges));
    }

    #[test]
    fn non_integral_rate() {
        assert_eq!(
            encode_pulses(&[true], 44_100.0),
            Err(PulseError::NonIntegralPrt(44_100.0))
        );
    }

    #[test]
    fn threshold_decisions() {
        assert_eq!(classify_prt(650.0).bit, RecoveredBit::Zero);
        assert_eq!(classify_prt(750.0).bit, RecoveredBit::One);
        assert_eq!(classify_prt(700.0).bit, RecoveredBit::Erased);
        assert_eq!(classify_prt(709.9).bit, RecoveredBit::Erased);
        assert_eq!(classify_prt(690.0).bit, RecoveredBit::Erased);
        assert_eq!(classify_prt(689.0).bit, RecoveredBit::Zero);
        assert_eq!(classify_prt(711.0).bit, RecoveredBit::One);
    }

    #[test]
    fn round_trip_worked_example() {
        let c = build_code(8, 1, false).unwrap();
        let train = encode_pulses(&serialize_bits(&c), PULSE_SAMPLE_RATE).unwrap();
        let bits = recover_bits(&train.samples).unwrap();
        assert_eq!(parse_bits(&bits).unwrap(), c);
    }

    #[test]
    fn measured_periods_are_exact() {
        let train = encode_pulses(&[true, false, false, true], PULSE_SAMPLE_RATE).unwrap();
        let m = recover_pulses(&train.samples).unwrap();
        let periods: Vec<f64> = m.iter().map(|m| m.period_us).collect();
        assert_eq!(periods, vec![800.0, 600.0, 600.0, 800.0]);
    }

    #[test]
    fn sinusoid_of_800us_reads_as_ones() {
        let fs = PULSE_SAMPLE_RATE;
        let s: Vec<f64> = (0..(fs * 0.008) as usize)
            .map(|i| (2.0 * std::f64::consts::PI * 1250.0 * i as f64 / fs).sin())
            .collect();
        let bits = recover_bits(&SampleBuffer::new(s, fs)).unwrap();
        assert!(bits.len() >= 8);
        assert!(bits.iter().all(|&b| b == RecoveredBit::One), "{bits:?}");
    }

    #[test]
    fn dc_offset_is_ignored() {
        let c = build_code(42, 17, true).unwrap();
        let mut train = encode_pulses(&serialize_bits(&c), PULSE_SAMPLE_RATE).unwrap();
        for v in train.samples.iter_mut() {
            *v += 0.5;
        }
        assert_eq!(parse_bits(&recover_bits(&train.samples).unwrap()).unwrap(), c);
    }
}
