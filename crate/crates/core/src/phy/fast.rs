use rustfft::num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ChannelState, Despread, PnSequence};
use crate::signal::dbm_to_linear;

/// Correlator-domain channel: produces the same despreader outputs as
/// spreading, [`channel_transmit`](super::channel_transmit) and
/// [`despread`](super::despread) at one sample per chip, without
/// materializing the chips.
///
/// For a block of `N` chips `x_k = b s p_k + A cos(w k + phi) + n_k` the
/// correlation is `b s N + A Re(e^{i phi} C(w)) + g` with
/// `C(w) = sum_k p_k e^{i w k}` and `g ~ N(0, N sigma^2)`. The block energy
/// is evaluated in closed form with the noise term replaced by its mean.
/// `C(w)` is read from a table on a grid of `GRID` frequencies. A block
/// that straddles the start or end of a jammer visit is treated as fully
/// jammed or fully clear according to its midpoint.
#[derive(Debug, Clone)]
pub struct CorrelatorChannel {
    pn: PnSequence,
    chip_rate: f64,
    /// `C(w)` at `w = pi i / GRID`, built on first use.
    table: Vec<Complex<f64>>,
}

/// Frequency grid of the `C(w)` table over `[0, pi]`.
pub const GRID: usize = 1 << 15;

impl CorrelatorChannel {
    pub fn new(pn: PnSequence, chip_rate: f64) -> Self {
        CorrelatorChannel {
            pn,
            chip_rate,
            table: Vec::new(),
        }
    }

    pub fn pn(&self) -> &PnSequence {
        &self.pn
    }

    /// `C(w)` and `G(w) = sum_k e^{2 i w k}` for `w = pi * fraction`.
    fn spectra(&mut self, fraction: f64) -> (f64, Complex<f64>, Complex<f64>) {
        if self.table.is_empty() {
            let chips = self.pn.chips();
            self.table = (0..=GRID)
                .map(|i| {
                    let w = std::f64::consts::PI * i as f64 / GRID as f64;
                    chips
                        .iter()
                        .enumerate()
                        .map(|(k, &p)| Complex::from_polar(p, w * k as f64))
                        .sum()
                })
                .collect();
        }
        let i = (fraction.clamp(0.0, 1.0) * GRID as f64).round() as usize;
        let w = std::f64::consts::PI * i as f64 / GRID as f64;
        let n = self.pn.len() as f64;
        let z = Complex::from_polar(1.0, 2.0 * w);
        let g = if (z - 1.0).norm() < 1e-12 {
            Complex::new(n, 0.0)
        } else {
            (Complex::new(1.0, 0.0) - Complex::from_polar(1.0, 2.0 * w * n)) / (Complex::new(1.0, 0.0) - z)
        };
        (w, self.table[i], g)
    }

    /// Despreads `bits` sent at `signal_dbm` starting at time `t`.
    pub fn transmit<R: Rng + ?Sized>(
        &mut self,
        bits: &[bool],
        signal_dbm: f64,
        state: &ChannelState,
        t: f64,
        rng: &mut R,
    ) -> Despread {
        let n = self.pn.len() as f64;
        let s = dbm_to_linear(signal_dbm).sqrt();
        let var = dbm_to_linear(state.noise_power_dbm);
        let bit_time = n / self.chip_rate;
        let mut out_bits = Vec::with_capacity(bits.len());
        let mut margins = Vec::with_capacity(bits.len());
        let mut energies = Vec::with_capacity(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            let t0 = t + i as f64 * bit_time;
            let sign = if b { 1.0 } else { -1.0 };
            let mut corr = sign * s * n;
            let mut energy = s * s * n + var * n;
            if var > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                corr += z * (n * var).sqrt();
            }
            let mid = t0 + bit_time / 2.0;
            if let Some(j) = state.jammer_on(state.active_channel, mid) {
                let k = j.tone_index(mid).expect("jammer active");
                let tone = j.tone(k);
                let tau = mid - j.tone_start(k);
                let (w, c, g) = self.spectra(tone.nyquist_fraction);
                let a = j.amplitude();
                // phase referred back from the midpoint to chip 0
                let phi = tone.phase_at(tau, self.chip_rate) - w * n / 2.0;
                let rot = Complex::from_polar(1.0, phi);
                let leak = a * (rot * c).re;
                corr += leak;
                energy += a * a * (n / 2.0 + 0.5 * (rot * rot * g).re) + 2.0 * sign * s * leak;
            }
            out_bits.push(corr > 0.0);
            margins.push(if energy > 0.0 {
                corr.abs() / (n * energy).sqrt()
            } else {
                0.0
            });
            energies.push(energy / n);
        }
        Despread {
            bits: out_bits,
            margins,
            energies,
        }
    }
}
