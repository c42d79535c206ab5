//! Seeded pseudo-random numbers for parameter init, sampling, and data
//! generation.
//!
//! Everything that needs randomness in this workspace draws from [`Lcg64`],
//! a 64-bit linear congruential generator with Knuth's MMIX constants
//! (multiplier `6364136223846793005`, increment `1442695040888963407`).
//! Output is taken from the high 32 bits of the state, which are the
//! strongest bits of an LCG. The generator is tiny, portable, and gives
//! bit-identical streams on every platform, which is what the determinism
//! contracts of this project actually require.

/// MMIX multiplier (Knuth, TAOCP vol. 2).
const MUL: u64 = 6364136223846793005;
/// MMIX increment.
const INC: u64 = 1442695040888963407;

/// 64-bit linear congruential generator.
#[derive(Clone, Debug)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    /// Seed the generator. One warm-up step decorrelates small seeds.
    pub fn new(seed: u64) -> Self {
        let mut rng = Lcg64 {
            state: seed.wrapping_add(INC),
        };
        rng.step();
        rng
    }

    fn step(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(MUL).wrapping_add(INC);
        self.state
    }

    /// Next 32 uniform bits (the high half of the state).
    pub fn next_u32(&mut self) -> u32 {
        (self.step() >> 32) as u32
    }

    /// Next 64 uniform bits, assembled from two draws of the high half.
    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform integer in `[0, bound)` via the multiply-shift reduction.
    /// `bound` must be nonzero.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.next_u32() as u64 * bound as u64) >> 32) as usize
    }

    /// Uniform f32 in `[0, 1)` with 24 bits of resolution, so every value is
    /// exactly representable.
    pub fn unit_f32(&mut self) -> f32 {
        (self.next_u32() >> 8) as f32 / 16_777_216.0
    }

    /// Uniform f32 in `[-bound, bound)`.
    pub fn symmetric_f32(&mut self, bound: f32) -> f32 {
        (2.0 * self.unit_f32() - 1.0) * bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Lcg64::new(42);
        let mut b = Lcg64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn different_seeds_diverge() {
        let mut a = Lcg64::new(1);
        let mut b = Lcg64::new(2);
        let same = (0..16).filter(|_| a.next_u32() == b.next_u32()).count();
        assert!(same < 16);
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = Lcg64::new(7);
        for bound in [1usize, 2, 3, 10, 1000] {
            for _ in 0..200 {
                assert!(rng.below(bound) < bound);
            }
        }
    }

    #[test]
    fn unit_in_half_open_interval() {
        let mut rng = Lcg64::new(9);
        for _ in 0..1000 {
            let u = rng.unit_f32();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
