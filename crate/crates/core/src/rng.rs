//! Seeded, splittable random streams.
//!
//! Every stochastic component (environment sampling, acting, imagination)
//! owns a [`SimRng`]. Streams are ChaCha8 keyed by a 64-bit seed plus a
//! stream id, so two streams from the same seed never overlap and any stream
//! can be resumed from its [`RngCursor`].

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stream ids used by one agent/environment pair.
pub mod streams {
    pub const ENVIRONMENT: u64 = 0;
    pub const ACTING: u64 = 1;
    pub const IMAGINATION: u64 = 2;
    pub const PROBE: u64 = 3;
}

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
    seed: u64,
}

/// Resumable position of a [`SimRng`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngCursor {
    pub seed: u64,
    pub stream: u64,
    /// Position in 32-bit words. Stored as a decimal string since JSON
    /// numbers cannot carry 128-bit integers.
    #[serde(with = "u128_decimal")]
    pub word_pos: u128,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, seed }
    }

    /// Independent stream sharing this generator's seed.
    pub fn split(&self, stream: u64) -> Self {
        Self::with_stream(self.seed, stream)
    }

    pub fn from_cursor(cursor: RngCursor) -> Self {
        let mut rng = Self::with_stream(cursor.seed, cursor.stream);
        rng.inner.set_word_pos(cursor.word_pos);
        rng
    }

    pub fn cursor(&self) -> RngCursor {
        RngCursor {
            seed: self.seed,
            stream: self.inner.get_stream(),
            word_pos: self.inner.get_word_pos(),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from a discrete distribution.
    ///
    /// Degenerate distributions (a single nonzero entry) are resolved without
    /// consuming randomness, which keeps paired rollouts aligned on their
    /// genuinely stochastic steps.
    pub fn sample_index(&mut self, probs: &[f64]) -> usize {
        let mut support = probs.iter().enumerate().filter(|(_, &p)| p > 0.0);
        let first = support.next().map(|(i, _)| i).unwrap_or(0);
        if support.next().is_none() {
            return first;
        }
        let u = self.next_f64();
        let mut acc = 0.0;
        let mut last = first;
        for (i, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }
}

mod u128_decimal {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
