use std::f64::consts::PI;

use super::PhyError;
use crate::pulse::{self, HandshakeCode, PulseError, PULSE_SAMPLE_RATE};
use crate::signal::{dbm_to_linear, SampleBuffer};

/// Frequency-modulates a two-level baseband waveform: samples above the
/// midpoint of its range key `mark_freq`, the rest `space_freq`. The
/// output is a continuous-phase unit-amplitude sinusoid.
pub fn fm_modulate(levels: &SampleBuffer, mark_freq: f64, space_freq: f64) -> Result<SampleBuffer, PhyError> {
    let fs = levels.sample_rate();
    let nyquist = fs / 2.0;
    for f in [mark_freq, space_freq] {
        if !(f > 0.0 && f < nyquist) {
            return Err(PhyError::Aliasing { freq: f, nyquist });
        }
    }
    if mark_freq == space_freq {
        return Err(PhyError::SameTones);
    }
    let (lo, hi) = levels
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mid = 0.5 * (lo + hi);
    let mut phase = 0.0f64;
    let out = levels
        .iter()
        .map(|&x| {
            let y = phase.sin();
            let f = if hi > lo && x > mid { mark_freq } else { space_freq };
            phase = (phase + 2.0 * PI * f / fs) % (2.0 * PI);
            y
        })
        .collect();
    Ok(SampleBuffer::new(out, fs))
}

/// Zero-crossing frequency discriminator. Each output sample is the
/// instantaneous frequency in Hz implied by the most recent half cycle.
///
/// A Schmitt trigger at a fifth of the RMS level suppresses chatter from
/// noise near the axis; the crossing instant is interpolated between the
/// samples that straddle zero.
pub fn fm_discriminate(buf: &SampleBuffer) -> SampleBuffer {
    let fs = buf.sample_rate();
    let n = buf.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return SampleBuffer::new(out, fs);
    }
    let h = 0.2 * buf.power().sqrt();
    let mut state = buf[0] >= 0.0;
    let mut last_zero = 0usize;
    let mut prev_cross: Option<f64> = None;
    let mut freq = 0.0;
    let mut first_valid = None;
    for i in 1..n {
        if (buf[i - 1] >= 0.0) != (buf[i] >= 0.0) {
            last_zero = i;
        }
        let flip = if state { buf[i] < -h } else { buf[i] > h };
        if flip {
            state = !state;
            let k = last_zero.max(1);
            let (a, b) = (buf[k - 1], buf[k]);
            let frac = if a != b { a / (a - b) } else { 0.0 };
            let t = (k - 1) as f64 + frac.clamp(0.0, 1.0);
            if let Some(p) = prev_cross {
                if t > p {
                    freq = fs / (2.0 * (t - p));
                    first_valid.get_or_insert(i);
                }
            }
            prev_cross = Some(t);
        }
        out[i] = freq;
    }
    // hold the first estimate backwards so the output has no artificial
    // zero-frequency lead-in
    if let Some(i0) = first_valid {
        let f0 = out[i0];
        out[..i0].fill(f0);
    }
    SampleBuffer::new(out, fs)
}

/// Air interface for handshake codes: PRT pulse train → FM → channel →
/// discriminator → pulse recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct HandshakeRadio {
    pub mark_hz: f64,
    pub space_hz: f64,
    pub signal_dbm: f64,
    /// Space-tone lead-in and tail around the pulse train, seconds.
    pub padding: f64,
}

impl Default for HandshakeRadio {
    fn default() -> Self {
        HandshakeRadio {
            mark_hz: 20_000.0,
            space_hz: 10_000.0,
            signal_dbm: -30.0,
            padding: 300e-6,
        }
    }
}

impl HandshakeRadio {
    pub fn sample_rate(&self) -> f64 {
        PULSE_SAMPLE_RATE
    }

    pub fn transmit(&self, code: &HandshakeCode) -> Result<SampleBuffer, PhyError> {
        let bits = pulse::serialize_bits(code);
        let train = pulse::encode_pulses(&bits, PULSE_SAMPLE_RATE).expect("100 kHz gives integral PRTs");
        let pad = (self.padding * PULSE_SAMPLE_RATE).round() as usize;
        let mut levels = SampleBuffer::zeros(pad, PULSE_SAMPLE_RATE);
        levels.append(&train.samples);
        levels.append(&SampleBuffer::zeros(pad, PULSE_SAMPLE_RATE));
        let mut rf = fm_modulate(&levels, self.mark_hz, self.space_hz)?;
        let amp = (2.0 * dbm_to_linear(self.signal_dbm)).sqrt();
        rf.iter_mut().for_each(|x| *x *= amp);
        Ok(rf)
    }

    /// Airtime of one code in seconds; depends on the bit pattern.
    pub fn airtime(&self, code: &HandshakeCode) -> f64 {
        let bits = pulse::serialize_bits(code);
        let (_, len) = pulse::pulse_edges(&bits, PULSE_SAMPLE_RATE).expect("integral PRTs");
        len as f64 / PULSE_SAMPLE_RATE + 2.0 * self.padding
    }

    pub fn receive(&self, rf: &SampleBuffer) -> Result<HandshakeCode, PulseError> {
        let baseband = fm_discriminate(rf);
        let bits = pulse::recover_bits(&baseband)?;
        pulse::parse_bits(&bits)
    }
}
