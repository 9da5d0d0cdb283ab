//! Deterministic per-thread random streams.
//!
//! Every random choice the schedulers and simulators make flows through an
//! [`RngStream`], so a fixed `(seed, thread)` pair replays the exact same
//! sequence. The generator is xoshiro256++ seeded through SplitMix64; both are
//! public-domain constructions.

/// A small, fast, deterministic PRNG. Two streams created with the same seed
/// and stream id produce identical sequences.
#[derive(Clone, Debug)]
pub struct RngStream {
    state: [u64; 4],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    /// Stream for a given global seed and stream id (usually a thread index).
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut s = seed ^ stream.wrapping_mul(0xa076_1d64_78bd_642f);
        let mut state = [0u64; 4];
        for word in &mut state {
            *word = splitmix64(&mut s);
        }
        // xoshiro must not start from the all-zero state.
        if state == [0; 4] {
            state[0] = 0x9e37_79b9_7f4a_7c15;
        }
        RngStream { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform index in `0..bound`. `bound` must be non-zero.
    pub fn next_index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        // Lemire's multiply-shift; bias is bound/2^64, irrelevant here.
        let r = self.next_u64() as u128;
        ((r * bound as u128) >> 64) as usize
    }

    /// Two distinct uniform indices in `0..bound`; resamples until distinct.
    /// `bound` must be at least 2.
    pub fn next_distinct_pair(&mut self, bound: usize) -> (usize, usize) {
        debug_assert!(bound >= 2);
        let first = self.next_index(bound);
        loop {
            let second = self.next_index(bound);
            if second != first {
                return (first, second);
            }
        }
    }

    /// Uniform float in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Biased coin: true with probability `p`.
    pub fn next_coin(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Exponentially distributed value with the given mean.
    pub fn next_exponential(&mut self, mean: f64) -> f64 {
        let u = self.next_f64();
        -mean * (1.0 - u).ln()
    }
}
