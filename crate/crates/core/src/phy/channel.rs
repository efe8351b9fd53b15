use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::PhyError;
use crate::signal::{dbm_to_linear, SampleBuffer};

/// Evenly spaced carriers between `base_hz` and `top_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPlan {
    pub base_hz: f64,
    pub top_hz: f64,
    pub spacing_hz: f64,
    pub channel_count: usize,
}

impl Default for ChannelPlan {
    /// 26 channels of 1 MHz between 902 and 928 MHz.
    fn default() -> Self {
        ChannelPlan {
            base_hz: 902e6,
            top_hz: 928e6,
            spacing_hz: 1e6,
            channel_count: 26,
        }
    }
}

impl ChannelPlan {
    /// Centre frequency of channel `i`.
    pub fn carrier(&self, i: usize) -> Result<f64, PhyError> {
        self.check(i)?;
        Ok(self.base_hz + i as f64 * self.spacing_hz + self.spacing_hz / 2.0)
    }

    pub fn check(&self, i: usize) -> Result<(), PhyError> {
        if i < self.channel_count {
            Ok(())
        } else {
            Err(PhyError::ChannelOutOfRange {
                index: i,
                count: self.channel_count,
            })
        }
    }
}

/// Lowest and highest jammer frequency as fractions of the receiver's
/// Nyquist band.
pub const TONE_SPAN: (f64, f64) = (0.05, 0.95);

/// Tone used by the jammer during one visit. The frequency is a fraction
/// of the receiver's Nyquist band, so the same visit can be rendered at
/// any sample rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JamTone {
    pub nyquist_fraction: f64,
    /// Phase at the start of the visit, in radians.
    pub phase: f64,
}

impl JamTone {
    /// Phase `tau` seconds into the visit, seen by a receiver sampling at
    /// `fs`.
    pub fn phase_at(&self, tau: f64, fs: f64) -> f64 {
        self.phase + PI * self.nyquist_fraction * fs * tau
    }
}

/// Single-tone interferer that steps through `sweep_order`, spending
/// `dwell_time` seconds on each entry.
///
/// The tone is retuned every `tone_period` seconds (once per visit when
/// the period is 0). Successive tones follow a golden-ratio sequence over
/// [`TONE_SPAN`] from a seeded offset, so any run of consecutive tones
/// samples the band evenly.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepJammer {
    pub dwell_time: f64,
    pub power_dbm: f64,
    pub sweep_order: Vec<usize>,
    pub enabled: bool,
    /// Time at which visit 0 begins.
    pub start_time: f64,
    /// Seeds the tone sequence offset and the per-visit phase.
    pub seed: u64,
    pub tone_period: f64,
}

impl SweepJammer {
    /// Enabled jammer sweeping every channel of `plan` in ascending order.
    pub fn ascending(plan: &ChannelPlan, dwell_time: f64, power_dbm: f64) -> Result<Self, PhyError> {
        let j = SweepJammer {
            dwell_time,
            power_dbm,
            sweep_order: (0..plan.channel_count).collect(),
            enabled: true,
            start_time: 0.0,
            seed: 0,
            tone_period: 0.0,
        };
        j.validate(plan)?;
        Ok(j)
    }

    pub fn validate(&self, plan: &ChannelPlan) -> Result<(), PhyError> {
        if !(self.dwell_time > 0.0 && self.dwell_time.is_finite()) {
            return Err(PhyError::InvalidDwell(self.dwell_time));
        }
        if self.sweep_order.is_empty() {
            return Err(PhyError::EmptySweep);
        }
        if !(self.tone_period >= 0.0 && self.tone_period.is_finite()) {
            return Err(PhyError::InvalidTonePeriod(self.tone_period));
        }
        for &c in &self.sweep_order {
            plan.check(c)?;
        }
        Ok(())
    }

    /// Index of the visit in progress at `t`, or `None` before the start
    /// or while disabled.
    pub fn visit_at(&self, t: f64) -> Option<u64> {
        if !self.enabled || t < self.start_time {
            return None;
        }
        Some(((t - self.start_time) / self.dwell_time).floor() as u64)
    }

    pub fn visit_start(&self, visit: u64) -> f64 {
        self.start_time + visit as f64 * self.dwell_time
    }

    pub fn channel_of_visit(&self, visit: u64) -> usize {
        self.sweep_order[(visit % self.sweep_order.len() as u64) as usize]
    }

    /// Channel occupied at `t`.
    pub fn channel_at(&self, t: f64) -> Option<usize> {
        self.visit_at(t).map(|v| self.channel_of_visit(v))
    }

    /// Index of the tone in use at `t`, counted from the sweep start.
    pub fn tone_index(&self, t: f64) -> Option<u64> {
        if self.tone_period > 0.0 {
            if !self.enabled || t < self.start_time {
                return None;
            }
            Some(((t - self.start_time) / self.tone_period).floor() as u64)
        } else {
            self.visit_at(t)
        }
    }

    /// Time at which tone `index` starts.
    pub fn tone_start(&self, index: u64) -> f64 {
        if self.tone_period > 0.0 {
            self.start_time + index as f64 * self.tone_period
        } else {
            self.visit_start(index)
        }
    }

    pub fn tone(&self, index: u64) -> JamTone {
        const GOLDEN: f64 = 0.618_033_988_749_894_8;
        let offset = ChaCha8Rng::seed_from_u64(self.seed).random_range(0.0..1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let (lo, hi) = TONE_SPAN;
        JamTone {
            nyquist_fraction: lo + (hi - lo) * (offset + index as f64 * GOLDEN).fract(),
            phase: rng.random_range(0.0..2.0 * PI),
        }
    }

    /// Peak amplitude of the jamming tone.
    pub fn amplitude(&self) -> f64 {
        (2.0 * dbm_to_linear(self.power_dbm)).sqrt()
    }
}

/// What the simulator knows about the medium around one link.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub plan: ChannelPlan,
    pub active_channel: usize,
    /// `-inf` disables noise.
    pub noise_power_dbm: f64,
    pub jammer: Option<SweepJammer>,
}

impl ChannelState {
    pub fn new(
        plan: ChannelPlan,
        active_channel: usize,
        noise_power_dbm: f64,
        jammer: Option<SweepJammer>,
    ) -> Result<Self, PhyError> {
        plan.check(active_channel)?;
        if let Some(j) = &jammer {
            j.validate(&plan)?;
        }
        Ok(ChannelState {
            plan,
            active_channel,
            noise_power_dbm,
            jammer,
        })
    }

    /// Jammer occupying `channel` at `t`, if any.
    pub fn jammer_on(&self, channel: usize, t: f64) -> Option<&SweepJammer> {
        self.jammer
            .as_ref()
            .filter(|j| j.channel_at(t) == Some(channel))
    }

    pub fn jammed_channel(&self, t: f64) -> Option<usize> {
        self.jammer.as_ref().and_then(|j| j.channel_at(t))
    }
}

/// Passes `buf`, whose first sample is at time `t`, through the active
/// channel: adds white Gaussian noise and the jamming tone for every
/// sample during which the jammer occupies the active channel.
pub fn channel_transmit<R: Rng + ?Sized>(
    buf: &SampleBuffer,
    state: &ChannelState,
    t: f64,
    rng: &mut R,
) -> SampleBuffer {
    let fs = buf.sample_rate();
    let mut out = buf.clone();
    let sigma = dbm_to_linear(state.noise_power_dbm).sqrt();
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).expect("finite noise power");
        for x in out.iter_mut() {
            *x += noise.sample(rng);
        }
    }
    if let Some(j) = &state.jammer {
        let amp = j.amplitude();
        if amp > 0.0 {
            let mut cached: Option<(u64, JamTone)> = None;
            for (i, x) in out.iter_mut().enumerate() {
                let ti = t + i as f64 / fs;
                let Some(v) = j.visit_at(ti) else { continue };
                if j.channel_of_visit(v) != state.active_channel {
                    continue;
                }
                let k = j.tone_index(ti).expect("jammer active");
                let tone = match cached {
                    Some((ck, tone)) if ck == k => tone,
                    _ => {
                        let tone = j.tone(k);
                        cached = Some((k, tone));
                        tone
                    }
                };
                *x += amp * tone.phase_at(ti - j.tone_start(k), fs).cos();
            }
        }
    }
    out
}

/// First channel after the active one, cyclically ascending, that the
/// jammer does not occupy at `t`.
pub fn next_free_channel(state: &ChannelState, t: f64) -> Result<usize, PhyError> {
    let n = state.plan.channel_count;
    let busy = state.jammed_channel(t);
    (1..=n)
        .map(|k| (state.active_channel + k) % n)
        .find(|&c| Some(c) != busy)
        .ok_or(PhyError::NoFreeChannel)
}
