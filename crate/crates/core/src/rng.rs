//! Per-trajectory random symbol streams.
//!
//! Every trajectory gets its own ChaCha8 stream: the key is derived from the
//! master seed and the stream id is the trajectory index. The symbols of a
//! trajectory therefore depend only on `(seed, index)`, never on which
//! thread ran it or in which order.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Source of i.i.d. symbols `+1` / `-1` with probability 1/2 each.
#[derive(Clone, Debug)]
pub struct SymbolStream {
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl SymbolStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self { rng, bits: 0, left: 0 }
    }

    #[inline]
    pub fn next_symbol(&mut self) -> i8 {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 64;
        }
        let s = if self.bits & 1 == 1 { 1 } else { -1 };
        self.bits >>= 1;
        self.left -= 1;
        s
    }

    /// Uniform on `[0, 1)` with 53 random bits. Uses the underlying stream
    /// directly, independent of the buffered symbol bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn word(&mut self, n: usize) -> crate::dynamics::Word {
        let syms = (0..n).map(|_| self.next_symbol()).collect();
        crate::dynamics::Word::new(syms).expect("symbols are +-1")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: alloc::vec::Vec<i8> = {
            let mut s = SymbolStream::new(42, 3);
            (0..200).map(|_| s.next_symbol()).collect()
        };
        let b: alloc::vec::Vec<i8> = {
            let mut s = SymbolStream::new(42, 3);
            (0..200).map(|_| s.next_symbol()).collect()
        };
        let c: alloc::vec::Vec<i8> = {
            let mut s = SymbolStream::new(42, 4);
            (0..200).map(|_| s.next_symbol()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn symbols_are_balanced() {
        let n = 1_000_000;
        let mut s = SymbolStream::new(7, 0);
        let sum: i64 = (0..n).map(|_| i64::from(s.next_symbol())).sum();
        let mean = sum as f64 / n as f64;
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn unit_draws_in_range() {
        let mut s = SymbolStream::new(1, 1);
        for _ in 0..1000 {
            let u = s.next_unit();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
