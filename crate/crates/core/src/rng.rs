//! SplitMix64 and the partial Fisher–Yates shuffle used for every seeded
//! choice in the crate. Both are pinned so that samples can be reproduced
//! bit-for-bit by other implementations.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish index in `0..n` by modulo reduction. `n` must be non-zero.
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// True with probability `percent`/100.
    pub fn chance(&mut self, percent: u64) -> bool {
        self.next_u64() % 100 < percent
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }
}

/// Forward partial Fisher–Yates: afterwards `items[..k]` is a uniform
/// sample. For each `i < k`, swaps `i` with `i + r % (len - i)`.
pub fn partial_shuffle<T>(items: &mut [T], k: usize, rng: &mut SplitMix64) {
    let len = items.len();
    for i in 0..k.min(len) {
        let j = i + rng.below(len - i);
        items.swap(i, j);
    }
}
