use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Channel sequence shared by both ends of a link. Position 0 is the
/// channel the handshake ran on; the rest is a permutation of the other
/// channels derived from a shared key and the two addresses, so both
/// nodes compute the same list without exchanging it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HopList {
    order: Vec<usize>,
    position: usize,
}

impl HopList {
    pub fn new(key: u64, a: u8, b: u8, start_channel: usize, channel_count: usize) -> Self {
        let (lo, hi) = (a.min(b) as u64, a.max(b) as u64);
        let seed = key ^ (lo << 8 | hi).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut rest: Vec<usize> = (0..channel_count).filter(|&c| c != start_channel).collect();
        rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut order = vec![start_channel];
        order.extend(rest);
        HopList { order, position: 0 }
    }

    pub fn current(&self) -> usize {
        self.order[self.position]
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Moves to the next entry, wrapping at the end, and returns it.
    pub fn advance(&mut self) -> usize {
        self.position = (self.position + 1) % self.order.len();
        self.current()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_ends_agree() {
        let a = HopList::new(42, 8, 1, 0, 26);
        let b = HopList::new(42, 1, 8, 0, 26);
        assert_eq!(a, b);
        assert_eq!(a.current(), 0);
        let mut sorted = a.order().to_vec();
        sorted.sort();
        assert_eq!(sorted, (0..26).collect::<Vec<_>>());
        assert_ne!(HopList::new(43, 8, 1, 0, 26), a);
    }

    #[test]
    fn wraps_after_full_cycle() {
        let mut h = HopList::new(1, 2, 3, 2, 4);
        let seen: Vec<usize> = (0..4).map(|_| h.advance()).collect();
        assert_eq!(*seen.last().unwrap(), 2);
        assert_eq!(h.position(), 0);
    }
}
