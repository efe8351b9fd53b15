use super::PhyError;

/// Feedback taps used for each supported register degree. Each polynomial
/// is primitive, so the register cycles through all `2^n - 1` nonzero states.
pub const DEFAULT_TAPS: [(u32, &[u32]); 3] = [(5, &[5, 3]), (6, &[6, 5]), (7, &[7, 6])];

/// One period of a maximal-length pseudonoise sequence as ±1 chips.
#[derive(Debug, Clone, PartialEq)]
pub struct PnSequence {
    chips: Vec<f64>,
    degree: u32,
    taps: Vec<u32>,
}

impl PnSequence {
    /// m-sequence of length `2^degree - 1` with the default taps.
    pub fn m_sequence(degree: u32) -> Result<Self, PhyError> {
        let taps = DEFAULT_TAPS
            .iter()
            .find(|(d, _)| *d == degree)
            .map(|(_, t)| *t)
            .ok_or(PhyError::InvalidDegree(degree))?;
        Self::from_taps(degree, taps)
    }

    /// Runs a Fibonacci register with the given taps (1-based stage numbers)
    /// from the all-ones state. Fails unless the period is `2^degree - 1`.
    pub fn from_taps(degree: u32, taps: &[u32]) -> Result<Self, PhyError> {
        if !(2..=16).contains(&degree) {
            return Err(PhyError::InvalidDegree(degree));
        }
        let not_maximal = || PhyError::NotMaximal {
            degree,
            taps: taps.to_vec(),
        };
        if taps.is_empty() || taps.iter().any(|&t| t == 0 || t > degree) {
            return Err(not_maximal());
        }
        let period = (1usize << degree) - 1;
        let start: u32 = (1 << degree) - 1;
        let mut state = start;
        let mut chips = Vec::with_capacity(period);
        for i in 0..period {
            let out = state & 1;
            chips.push(if out == 1 { -1.0 } else { 1.0 });
            let fb = taps
                .iter()
                .fold(0, |acc, &t| acc ^ ((state >> (degree - t)) & 1));
            state = (state >> 1) | (fb << (degree - 1));
            if state == start && i + 1 < period {
                return Err(not_maximal());
            }
        }
        if state != start {
            return Err(not_maximal());
        }
        Ok(PnSequence {
            chips,
            degree,
            taps: taps.to_vec(),
        })
    }

    pub fn chips(&self) -> &[f64] {
        &self.chips
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn taps(&self) -> &[u32] {
        &self.taps
    }

    /// Periodic autocorrelation at `lag`.
    pub fn autocorrelation(&self, lag: usize) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| self.chips[i] * self.chips[(i + lag) % n])
            .sum()
    }

    pub fn processing_gain_db(&self) -> f64 {
        processing_gain_db(self.len())
    }
}

/// `10 log10(n)` for `n` chips per bit.
pub fn processing_gain_db(chips_per_bit: usize) -> f64 {
    10.0 * (chips_per_bit as f64).log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lengths() {
        for (d, n) in [(5, 31), (6, 63), (7, 127)] {
            assert_eq!(PnSequence::m_sequence(d).unwrap().len(), n);
        }
        assert_eq!(PnSequence::m_sequence(4), Err(PhyError::InvalidDegree(4)));
    }

    #[test]
    fn non_primitive_taps_rejected() {
        // x^6 + x^4 + 1 is the square of x^3 + x^2 + 1
        assert!(matches!(
            PnSequence::from_taps(6, &[6, 4]),
            Err(PhyError::NotMaximal { .. })
        ));
    }

    #[test]
    fn gain_of_127() {
        assert!((processing_gain_db(127) - 21.038).abs() < 1e-3);
    }

    #[test]
    fn balance() {
        let pn = PnSequence::m_sequence(7).unwrap();
        // one more -1 (register output 1) than +1
        assert_eq!(pn.chips().iter().sum::<f64>(), -1.0);
    }
}
