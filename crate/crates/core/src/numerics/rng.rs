use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Seeded pseudo-random stream.
///
/// Backed by ChaCha8 (`rand_chacha`), seeded through `SeedableRng::seed_from_u64`.
/// Both are pure software with a fixed output specification, so a given seed
/// yields the same stream on every platform.
///
/// Substreams come from [`RngState::substream`]: the child is seeded with the
/// parent's seed and then moved to ChaCha stream `id`. Substreams depend only on
/// `(seed, id)`, never on how far the parent has advanced.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent, reproducible child stream number `id`.
    pub fn substream(&self, id: u64) -> RngState {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(id.wrapping_add(1));
        RngState {
            seed: self.seed ^ id.rotate_left(32),
            inner,
        }
    }

    /// Child stream seeded from this stream's next output; advances `self`.
    pub fn split(&mut self) -> RngState {
        RngState::new(self.inner.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform sample from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if lo == hi {
            return lo;
        }
        self.inner.gen_range(lo..hi)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.gen_range(lo..=hi)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform(0.0, 1.0) < p
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
