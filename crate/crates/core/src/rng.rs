//! Seedable splitmix64 generator with bit-exact integer sampling.
//!
//! Every sampler consumes exactly one 64-bit draw, and bounded integers are
//! produced with a 128-bit multiply-shift, so any implementation of the same
//! steps reproduces the same layouts from the same seed.

use thiserror::Error;

use crate::geom::DbUnit;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RngError {
    #[error("empty interval [{lo}, {hi}]")]
    EmptyInterval { lo: DbUnit, hi: DbUnit },
    #[error("grid must be positive, got {0}")]
    BadGrid(DbUnit),
}

/// The splitmix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    z ^ (z >> 31)
}

/// One full splitmix64 step from `state`, returning the output.
pub fn splitmix64(state: u64) -> u64 {
    mix64(state.wrapping_add(GOLDEN_GAMMA))
}

/// A source of uniform 64-bit words. The bounded samplers are provided on
/// top of it so test doubles only have to supply raw draws.
pub trait RandomSource {
    fn next_u64(&mut self) -> u64;

    /// Uniform integer in `[lo, hi]`, both ends inclusive.
    fn rand_int(&mut self, lo: DbUnit, hi: DbUnit) -> Result<DbUnit, RngError> {
        if lo > hi {
            return Err(RngError::EmptyInterval { lo, hi });
        }
        let span = (hi as i128 - lo as i128 + 1) as u128;
        let offset = (self.next_u64() as u128 * span) >> 64;
        Ok((lo as i128 + offset as i128) as DbUnit)
    }

    /// `lo + k * grid` for uniform `k` in `[0, (hi - lo) / grid]`.
    fn rand_grid(&mut self, lo: DbUnit, hi: DbUnit, grid: DbUnit) -> Result<DbUnit, RngError> {
        if grid <= 0 {
            return Err(RngError::BadGrid(grid));
        }
        if hi < lo {
            return Err(RngError::EmptyInterval { lo, hi });
        }
        let k = self.rand_int(0, (hi - lo) / grid)?;
        Ok(lo + k * grid)
    }

    /// Uniform float in `[0, 1)` with 53 bits of resolution.
    fn rand_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `[0, n)`; `n` must be positive.
    fn rand_index(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal via Box-Muller; consumes two draws.
    fn rand_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.rand_unit();
        let u2 = self.rand_unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// splitmix64 generator. Single owner; clone to fork an identical stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream `index` derived from `seed`, seeded with
    /// `splitmix64(seed ^ index)`.
    pub fn stream(seed: u64, index: u64) -> Self {
        Self::new(splitmix64(seed ^ index))
    }

    pub fn state(&self) -> u64 {
        self.state
    }
}

impl RandomSource for Prng {
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }
}
