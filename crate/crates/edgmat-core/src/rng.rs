//! Seedable counter-based random number generator.
//!
//! All stochastic behaviour in this crate (parameter init, dropout masks,
//! stratified shuffles) draws from [`StreamRng`], a SplitMix64 generator: the
//! k-th output is the SplitMix64 finalizer applied to `base + k * GAMMA`,
//! where `base` is derived from the user seed and a purpose tag. Separate
//! tags give statistically independent streams from one seed, and every
//! stream is a pure function of `(seed, tag, k)` — no global state, identical
//! output on every platform.

use alloc::string::String;

/// Weyl increment from SplitMix64 (odd, so the counter sequence covers all of
/// `u64`).
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Steele, Lea & Flea 2014; same mixing constants as
/// `java.util.SplittableRandom`).
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the tag bytes; folds the purpose tag into the stream base.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// A deterministic random stream identified by `(seed, tag)`.
#[derive(Debug, Clone)]
pub struct StreamRng {
    base: u64,
    counter: u64,
}

impl StreamRng {
    /// Open the stream for `tag` under `seed`. Streams with different tags
    /// are independent; re-opening yields the identical sequence.
    pub fn new(seed: u64, tag: &str) -> Self {
        StreamRng {
            base: mix(seed ^ fnv1a(tag.as_bytes())),
            counter: 0,
        }
    }

    /// Stream for a numbered sub-purpose, e.g. one stream per class.
    pub fn substream(seed: u64, tag: &str, index: u64) -> Self {
        let mut rng = Self::new(seed, tag);
        rng.base = mix(rng.base ^ mix(index));
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        let k = self.counter;
        self.counter = self.counter.wrapping_add(1);
        mix(self.base.wrapping_add(k.wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire-style rejection keeps this exactly uniform.
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            let (hi, lo) = {
                let wide = u128::from(x) * u128::from(n);
                ((wide >> 64) as u64, wide as u64)
            };
            if lo >= threshold {
                return hi as usize;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Builds a per-parameter tag like `init/layer0.head1.w_node`.
pub fn tagged(prefix: &str, name: &str) -> String {
    let mut s = String::with_capacity(prefix.len() + 1 + name.len());
    s.push_str(prefix);
    s.push('/');
    s.push_str(name);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = StreamRng::new(42, "test");
        let mut b = StreamRng::new(42, "test");
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn tags_give_distinct_streams() {
        let mut a = StreamRng::new(42, "dropout");
        let mut b = StreamRng::new(42, "init");
        let same = (0..32).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn next_f64_in_unit_interval() {
        let mut rng = StreamRng::new(7, "unit");
        for _ in 0..1000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn below_is_roughly_uniform() {
        let mut rng = StreamRng::new(3, "below");
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[rng.below(5)] += 1;
        }
        for &c in &counts {
            assert!((c as f64 - 10_000.0).abs() < 500.0, "counts {counts:?}");
        }
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = StreamRng::new(11, "shuffle");
        let mut v: alloc::vec::Vec<usize> = (0..20).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..20).collect::<alloc::vec::Vec<_>>());
    }
}
