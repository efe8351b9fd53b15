//! Mono WAV files for sample buffers.
//!
//! Buffers are written as 32-bit float PCM so a round trip returns the
//! samples unscaled. Integer PCM files are read and mapped onto [-1, 1].

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::signal::SampleBuffer;

#[derive(Debug, thiserror::Error)]
pub enum WavError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("WAV format: {0}")]
    Format(String),
}

impl From<hound::Error> for WavError {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::IoError(e) => WavError::Io(e),
            other => WavError::Format(other.to_string()),
        }
    }
}

pub fn write_wav(path: &Path, buf: &SampleBuffer) -> Result<(), WavError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate().round() as u32,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(path, spec)?;
    for &s in buf.samples() {
        w.write_sample(s as f32)?;
    }
    w.finalize()?;
    Ok(())
}

/// Reads a WAV file. Multi-channel files keep only the first channel.
pub fn read_wav(path: &Path) -> Result<SampleBuffer, WavError> {
    let mut r = WavReader::open(path)?;
    let spec = r.spec();
    let step = spec.channels.max(1) as usize;
    let samples: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => r
            .samples::<f32>()
            .step_by(step)
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()?,
        SampleFormat::Int => {
            let full = (1i64 << (spec.bits_per_sample - 1)) as f64;
            r.samples::<i32>()
                .step_by(step)
                .map(|s| s.map(|v| v as f64 / full))
                .collect::<Result<_, _>>()?
        }
    };
    Ok(SampleBuffer::new(samples, spec.sample_rate as f64))
}
