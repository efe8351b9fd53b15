use std::f64::consts::PI;

use super::PhyError;
use crate::signal::SampleBuffer;

/// One demodulated FSK bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftBit {
    /// `None` when the period carried no energy.
    pub bit: Option<bool>,
    /// `|E_mark - E_space| / (E_mark + E_space)`, in `[0, 1]`.
    pub confidence: f64,
}

/// Sample index where bit `k` starts. Rounding the ideal boundary keeps
/// the long-run bit rate exact when `sample_rate / bit_rate` is fractional.
fn boundary(k: usize, samples_per_bit: f64) -> usize {
    (k as f64 * samples_per_bit).round() as usize
}

fn check(mark: f64, space: f64, bit_rate: f64, sample_rate: f64) -> Result<(), PhyError> {
    let nyquist = sample_rate / 2.0;
    for f in [mark, space] {
        if !(f > 0.0 && f < nyquist) {
            return Err(PhyError::Aliasing { freq: f, nyquist });
        }
    }
    if mark == space {
        return Err(PhyError::SameTones);
    }
    if !(bit_rate > 0.0 && bit_rate <= sample_rate) {
        return Err(PhyError::BadBitRate(bit_rate));
    }
    Ok(())
}

/// Continuous-phase binary FSK: 1 → `mark_freq`, 0 → `space_freq`, unit
/// amplitude.
pub fn fsk_modulate(
    bits: &[bool],
    mark_freq: f64,
    space_freq: f64,
    bit_rate: f64,
    sample_rate: f64,
) -> Result<SampleBuffer, PhyError> {
    check(mark_freq, space_freq, bit_rate, sample_rate)?;
    let spb = sample_rate / bit_rate;
    let mut out = Vec::with_capacity(boundary(bits.len(), spb));
    let mut phase = 0.0f64;
    for (k, &b) in bits.iter().enumerate() {
        let step = 2.0 * PI * if b { mark_freq } else { space_freq } / sample_rate;
        for _ in boundary(k, spb)..boundary(k + 1, spb) {
            out.push(phase.sin());
            phase = (phase + step) % (2.0 * PI);
        }
    }
    Ok(SampleBuffer::new(out, sample_rate))
}

/// Non-coherent two-tone correlator demodulator.
pub fn fsk_demodulate(
    buf: &SampleBuffer,
    mark_freq: f64,
    space_freq: f64,
    bit_rate: f64,
) -> Result<Vec<SoftBit>, PhyError> {
    let fs = buf.sample_rate();
    check(mark_freq, space_freq, bit_rate, fs)?;
    let spb = fs / bit_rate;
    let nbits = (buf.len() as f64 / spb).round() as usize;
    let energy = |seg: &[f64], start: usize, f: f64| {
        let w = 2.0 * PI * f / fs;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &x) in seg.iter().enumerate() {
            let ph = w * (start + i) as f64;
            re += x * ph.cos();
            im -= x * ph.sin();
        }
        re * re + im * im
    };
    Ok((0..nbits)
        .map(|k| {
            let (a, b) = (boundary(k, spb), boundary(k + 1, spb).min(buf.len()));
            let seg = &buf[a..b];
            let em = energy(seg, a, mark_freq);
            let es = energy(seg, a, space_freq);
            let total = em + es;
            if total <= 1e-18 * seg.len().max(1) as f64 {
                SoftBit {
                    bit: None,
                    confidence: 0.0,
                }
            } else {
                SoftBit {
                    bit: Some(em > es),
                    confidence: (em - es).abs() / total,
                }
            }
        })
        .collect())
}
