use num_bigint::BigUint;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Seeded random stream: ChaCha20 keyed by `rand_core`'s `seed_from_u64`
/// expansion of a 64-bit seed. The output depends only on the seed, not on
/// the platform.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RandomSource {
    pub const ALGORITHM: &'static str = "chacha20/seed_from_u64";

    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Seed of the `index`-th independent sub-stream (splitmix64 mix).
    pub fn derive_seed(seed: u64, index: u64) -> u64 {
        let mut z = seed
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform integer in `[0, bound)`; `bound` must be positive.
    pub fn below_u64(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let mask = u64::MAX >> (bound - 1).leading_zeros().min(63);
        let mask = if bound == 1 { 0 } else { mask };
        loop {
            let x = self.next_u64() & mask;
            if x < bound {
                return x;
            }
        }
    }

    /// Uniform big integer in `[0, bound)` by masked rejection.
    pub fn below(&mut self, bound: &BigUint) -> BigUint {
        let bits = bound.bits();
        assert!(bits > 0, "empty range");
        let words = bits.div_ceil(32) as usize;
        let top = (bits % 32) as u32;
        let mut digits = vec![0u32; words];
        loop {
            for d in digits.iter_mut() {
                *d = self.next_u32();
            }
            if top != 0 {
                digits[words - 1] &= (1u32 << top) - 1;
            }
            let x = BigUint::from_slice(&digits);
            if &x < bound {
                return x;
            }
        }
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
