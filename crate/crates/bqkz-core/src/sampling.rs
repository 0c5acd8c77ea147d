//! Seeded random sampling of generic complex parameters.
//!
//! Draws have real and imaginary parts uniform in [-1.5, 1.5]; callers can
//! reject draws that put a needed denominator inside the pole guard.

use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RANGE: f64 = 1.5;
const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Derive an independent stream for a named sub-suite; deterministic in
    /// (seed, label).
    pub fn fork(seed: u64, label: &str) -> Self {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in label.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        Self::new(seed ^ h)
    }

    pub fn draw(&mut self) -> C64 {
        let re = self.rng.gen_range(-RANGE..RANGE);
        let im = self.rng.gen_range(-RANGE..RANGE);
        C64::new(re, im)
    }

    /// Rejection-sample until `accept` holds.
    pub fn draw_guarded(&mut self, accept: impl Fn(C64) -> bool) -> C64 {
        for _ in 0..MAX_REJECTIONS {
            let z = self.draw();
            if accept(z) {
                return z;
            }
        }
        panic!("sampler: rejection guard never satisfied after {MAX_REJECTIONS} draws");
    }

    pub fn draw_vec(&mut self, n: usize) -> Vec<C64> {
        (0..n).map(|_| self.draw()).collect()
    }

    /// Retry `attempt` with fresh draws until it returns Ok.
    pub fn retry<T>(
        &mut self,
        tries: usize,
        mut attempt: impl FnMut(&mut Self) -> crate::Result<T>,
    ) -> T {
        let mut last_err = None;
        for _ in 0..tries {
            match attempt(self) {
                Ok(v) => return v,
                Err(e) => last_err = Some(e),
            }
        }
        panic!("sampler: all {tries} attempts failed; last error: {last_err:?}");
    }
}
