//! Seeded random streams.
//!
//! Every randomized stage of the pipeline draws from a [`Stream`]: a ChaCha8
//! generator (counter-based, platform-independent) with hand-rolled float and
//! integer constructions so output bytes depend only on the seed, never on a
//! distribution crate's internals. Independent sub-streams are derived with
//! [`derive_seed`] so parallel and serial execution produce identical results.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Frozen generator identifier recorded in dataset manifests.
pub const RNG_ALGORITHM: &str = "chacha8/v1";

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer over `base` and a stream index.
///
/// Used to give problem i, trial i, or experiment iteration i its own seed.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(GOLDEN);
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Child stream with its own independent seed.
    pub fn derive(&self, index: u64) -> Stream {
        // The parent's seed is not recoverable from the state, so children are
        // derived from fresh output words instead; callers that need
        // reproducible fan-out should derive from the original seed via
        // `derive_seed` and `Stream::new`.
        let mut clone = self.clone();
        Stream::new(derive_seed(clone.next_u64(), index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` built from the top 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Uniform angle in `(-pi, pi]`.
    pub fn angle(&mut self) -> f64 {
        let u = self.unit(); // [0, 1)
        std::f64::consts::PI * (1.0 - 2.0 * u) // (-pi, pi]
    }

    /// Uniform integer in `[0, n)`, unbiased via rejection.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = (u64::MAX / n) * n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Standard normal via Box-Muller (one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64); // (0, 1]
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// `k` distinct indices out of `[0, n)`, in draw order.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "sample_distinct: k > n");
        // Floyd's algorithm keeps the draw count at k regardless of n.
        let mut picked = Vec::with_capacity(k);
        for j in (n - k)..n {
            let t = self.below(j + 1);
            if picked.contains(&t) {
                picked.push(j);
            } else {
                picked.push(t);
            }
        }
        picked
    }
}
