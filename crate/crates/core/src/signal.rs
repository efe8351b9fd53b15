//! Real-valued sampled signals.

use std::ops::{Deref, DerefMut};

/// A real-valued discrete-time signal tagged with its sample rate in Hz.
///
/// Amplitudes are dimensionless with a nominal range of `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Self {
        assert!(
            sample_rate.is_finite() && sample_rate > 0.0,
            "sample rate must be positive, got {sample_rate}"
        );
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean power (mean square amplitude). Zero for an empty buffer.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64
    }

    /// Appends another buffer. Panics if the sample rates differ.
    pub fn append(&mut self, other: &SampleBuffer) {
        assert_eq!(
            self.sample_rate, other.sample_rate,
            "cannot append buffers with different sample rates"
        );
        self.samples.extend_from_slice(&other.samples);
    }

    /// Returns a copy of `range` as a new buffer with the same rate.
    pub fn slice(&self, range: std::ops::Range<usize>) -> SampleBuffer {
        SampleBuffer::new(self.samples[range].to_vec(), self.sample_rate)
    }
}

impl Deref for SampleBuffer {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.samples
    }
}

impl DerefMut for SampleBuffer {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }
}

/// Converts a power in dBm to linear units, with 0 dBm = 1.0.
///
/// `-inf` maps to exactly zero.
pub fn dbm_to_linear(dbm: f64) -> f64 {
    if dbm == f64::NEG_INFINITY {
        0.0
    } else {
        10f64.powf(dbm / 10.0)
    }
}

pub fn linear_to_dbm(power: f64) -> f64 {
    10.0 * power.log10()
}
