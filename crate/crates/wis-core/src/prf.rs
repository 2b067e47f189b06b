//! Keyed pseudorandom primitives.
//!
//! Everything that needs "randomness" in this crate — greenlist membership,
//! hashed token embeddings, the paraphrase oracle's choices, test data —
//! flows through the splitmix64 finalizer below. It is a published, well
//! studied 64-bit mixer, cheap enough to evaluate once per vocabulary entry
//! per generation step.

/// Odd constant from the splitmix64 stream (2^64 / phi).
pub const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// The splitmix64 finalizer: a bijective avalanche mix of a 64-bit word.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Absorb one word into a running hash state.
#[inline]
pub fn absorb(state: u64, word: u64) -> u64 {
    mix64(state.wrapping_add(GOLDEN_GAMMA).wrapping_add(word))
}

/// Hash a key plus a slice of token ids plus one candidate id down to 64 bits.
///
/// Ids are offset by 1 when absorbed so that token 0 is distinguishable from
/// padding-free absence; the candidate is absorbed last under a distinct
/// domain tag so (context, candidate) pairs never collide with longer
/// contexts.
#[inline]
pub fn hash_ids(key: u64, ids: &[u32], candidate: u32) -> u64 {
    let mut h = mix64(key);
    for &id in ids {
        h = absorb(h, id as u64 + 1);
    }
    absorb(h, ((candidate as u64) << 1) | 1)
}

/// Map a 64-bit word to a uniform double in [0, 1).
///
/// Uses the top 53 bits so the result is an exact multiple of 2^-53; naive
/// division of the full word by 2^64 can round up to exactly 1.0, which
/// would break `score < gamma` thresholding at gamma = 1.
#[inline]
pub fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Deterministic stream RNG built on the same mixer (splitmix64 proper).
///
/// Used for the paraphrase oracle and for seeded test data; not used on the
/// watermarking hot path, which hashes statelessly via [`hash_ids`].
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform double in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform integer in [0, n). `n` must be nonzero.
    #[inline]
    pub fn next_range(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_f64() * n as f64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix64_is_deterministic_and_avalanches() {
        assert_eq!(mix64(42), mix64(42));
        // Flipping one input bit should flip roughly half the output bits.
        let a = mix64(0x1234_5678);
        let b = mix64(0x1234_5679);
        let flipped = (a ^ b).count_ones();
        assert!((20..=44).contains(&flipped), "flipped {flipped} bits");
    }

    #[test]
    fn unit_f64_stays_below_one() {
        assert_eq!(unit_f64(0), 0.0);
        let max = unit_f64(u64::MAX);
        assert!(max < 1.0);
        assert!(max > 0.999_999_999);
    }

    #[test]
    fn hash_ids_separates_context_from_candidate() {
        // ([1, 2], 3) and ([1, 2, 3], ...) must not be forced to collide, and
        // moving an id between the context and candidate roles must matter.
        let a = hash_ids(7, &[1, 2], 3);
        let b = hash_ids(7, &[1, 2, 3], 3);
        let c = hash_ids(7, &[1], 2);
        assert_ne!(a, b);
        assert_ne!(hash_ids(7, &[1, 2], 0), hash_ids(7, &[1], 2));
        assert_ne!(a, c);
    }

    #[test]
    fn splitmix_stream_is_roughly_uniform() {
        let mut rng = SplitMix64::new(99);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| rng.next_f64()).sum::<f64>() / n as f64;
        // Standard error is ~0.002; allow 5 sigma.
        assert!((mean - 0.5).abs() < 0.011, "mean {mean}");
    }

    #[test]
    fn next_range_covers_all_buckets() {
        let mut rng = SplitMix64::new(3);
        let mut seen = [0usize; 7];
        for _ in 0..7_000 {
            seen[rng.next_range(7)] += 1;
        }
        for (i, &count) in seen.iter().enumerate() {
            assert!(count > 700, "bucket {i} undersampled: {count}");
        }
    }
}
