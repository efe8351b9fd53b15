use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::RangeInclusive;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::DtmfError;
use crate::signal::SampleBuffer;

/// Shortest buffer accepted by the peak estimator.
pub const MIN_ANALYSIS_LEN: usize = 256;

/// Transform length floor; shorter buffers are zero-padded up to this.
const MIN_FFT_LEN: usize = 8192;

/// Magnitudes at or below this are treated as silence.
const SILENCE_FLOOR: f64 = 1e-9;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// A refined spectral peak. `magnitude` is calibrated so that a sinusoid
/// of amplitude `a` produces a peak of magnitude close to `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub frequency: f64,
    pub magnitude: f64,
}

/// Hann-windowed, zero-padded magnitude spectrum of one analysis frame.
#[derive(Debug, Clone)]
pub(crate) struct Spectrum {
    mags: Vec<f64>,
    bin_hz: f64,
}

impl Spectrum {
    pub(crate) fn analyze(buf: &SampleBuffer) -> Result<Self, DtmfError> {
        let n = buf.len();
        if n < MIN_ANALYSIS_LEN {
            return Err(DtmfError::BufferTooShort {
                len: n,
                min: MIN_ANALYSIS_LEN,
            });
        }
        let fft_len = (n * 4).next_power_of_two().max(MIN_FFT_LEN);
        let mut data = vec![Complex::new(0.0, 0.0); fft_len];
        let mut wsum = 0.0;
        for (i, (&s, slot)) in buf.iter().zip(data.iter_mut()).enumerate() {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            wsum += w;
            *slot = Complex::new(s * w, 0.0);
        }
        let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(fft_len));
        fft.process(&mut data);
        let scale = 2.0 / wsum;
        let mags = data[..=fft_len / 2]
            .iter()
            .map(|c| c.norm() * scale)
            .collect();
        Ok(Spectrum {
            mags,
            bin_hz: buf.sample_rate() / fft_len as f64,
        })
    }

    pub(crate) fn bin_of(&self, freq: f64) -> usize {
        ((freq / self.bin_hz).round() as usize).min(self.mags.len() - 1)
    }

    pub(crate) fn bins(&self, band: RangeInclusive<f64>) -> RangeInclusive<usize> {
        self.bin_of(*band.start())..=self.bin_of(*band.end())
    }

    fn is_local_max(&self, k: usize) -> bool {
        k > 0
            && k + 1 < self.mags.len()
            && self.mags[k] > SILENCE_FLOOR
            && self.mags[k] > self.mags[k - 1]
            && self.mags[k] >= self.mags[k + 1]
    }

    /// Local maxima whose bin lies in `bins`, unsorted.
    pub(crate) fn local_maxima(&self, bins: RangeInclusive<usize>) -> impl Iterator<Item = usize> + '_ {
        bins.filter(move |&k| self.is_local_max(k))
    }

    /// Parabolic interpolation on the log-magnitude around bin `k`.
    pub(crate) fn refine(&self, k: usize) -> SpectralPeak {
        let (a, b, c) = (
            self.mags[k - 1].max(f64::MIN_POSITIVE).ln(),
            self.mags[k].ln(),
            self.mags[k + 1].max(f64::MIN_POSITIVE).ln(),
        );
        let denom = a - 2.0 * b + c;
        let delta = if denom.abs() > f64::EPSILON {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let peak_log = b - 0.25 * (a - c) * delta;
        SpectralPeak {
            frequency: (k as f64 + delta) * self.bin_hz,
            magnitude: peak_log.exp(),
        }
    }

    /// Median magnitude over `bins`.
    pub(crate) fn median(&self, bins: RangeInclusive<usize>) -> f64 {
        let mut v: Vec<f64> = self.mags[bins].to_vec();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(|a, b| a.total_cmp(b));
        let m = v.len() / 2;
        if v.len().is_multiple_of(2) {
            0.5 * (v[m - 1] + v[m])
        } else {
            v[m]
        }
    }

    pub(crate) fn magnitude(&self, k: usize) -> f64 {
        self.mags[k]
    }

    pub(crate) fn max_magnitude(&self) -> f64 {
        self.mags.iter().cloned().fold(0.0, f64::max)
    }

    pub(crate) fn all_bins(&self) -> RangeInclusive<usize> {
        0..=self.mags.len() - 1
    }
}

/// Finds up to `max_peaks` spectral peaks of `buf`, strongest first.
///
/// The buffer is Hann-windowed and zero-padded to at least 8192 points;
/// each local maximum is refined by parabolic interpolation across the
/// peak bin.
pub fn spectrum_peaks(buf: &SampleBuffer, max_peaks: usize) -> Result<Vec<SpectralPeak>, DtmfError> {
    let spec = Spectrum::analyze(buf)?;
    let mut peaks: Vec<SpectralPeak> = spec
        .local_maxima(spec.all_bins())
        .map(|k| spec.refine(k))
        .collect();
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    peaks.truncate(max_peaks);
    Ok(peaks)
}
