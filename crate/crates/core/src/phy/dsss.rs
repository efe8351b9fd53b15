use super::{PhyError, PnSequence};

/// Multiplies each bit (true = +1, false = -1) by one full period of `pn`.
pub fn spread(bits: &[bool], pn: &PnSequence) -> Vec<f64> {
    let mut out = Vec::with_capacity(bits.len() * pn.len());
    for &b in bits {
        let s = if b { 1.0 } else { -1.0 };
        out.extend(pn.chips().iter().map(|c| c * s));
    }
    out
}

/// Output of [`despread`].
#[derive(Debug, Clone, PartialEq)]
pub struct Despread {
    pub bits: Vec<bool>,
    /// Per-bit correlation magnitude normalized by the block energy, so a
    /// clean aligned block of any amplitude gives 1.0.
    pub margins: Vec<f64>,
    /// Per-bit mean-square level of the received block.
    pub energies: Vec<f64>,
}

/// Correlates each block of `pn.len()` chips against `pn`.
///
/// The margin is `|corr| / sqrt(N * sum(x^2))`, which is `|corr| / N` for
/// unit-amplitude chips and is insensitive to receive gain.
pub fn despread(chips: &[f64], pn: &PnSequence) -> Result<Despread, PhyError> {
    let n = pn.len();
    if !chips.len().is_multiple_of(n) {
        return Err(PhyError::LengthNotMultiple {
            len: chips.len(),
            n,
        });
    }
    let mut bits = Vec::with_capacity(chips.len() / n);
    let mut margins = Vec::with_capacity(chips.len() / n);
    let mut energies = Vec::with_capacity(chips.len() / n);
    for block in chips.chunks_exact(n) {
        let corr: f64 = block.iter().zip(pn.chips()).map(|(x, c)| x * c).sum();
        let energy: f64 = block.iter().map(|x| x * x).sum();
        bits.push(corr > 0.0);
        margins.push(if energy > 0.0 {
            corr.abs() / (n as f64 * energy).sqrt()
        } else {
            0.0
        });
        energies.push(energy / n as f64);
    }
    Ok(Despread {
        bits,
        margins,
        energies,
    })
}
