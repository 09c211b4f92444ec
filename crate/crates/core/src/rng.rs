//! Counter-based deterministic randomness.
//!
//! All randomness in the crate is drawn from Philox4x64-10 (Salmon et al.,
//! "Parallel random numbers: as easy as 1, 2, 3"). A draw is addressed by
//! `(master seed, stream id, index)`: the key is `[seed, stream]` and the
//! counter is `[index, block, 0, 0]`, where `block` advances as a stream is
//! consumed. Because every (seed, stream, index) triple owns an independent
//! sequence, results never depend on execution order or worker count.

use rand::RngCore;

const PHILOX_M0: u64 = 0xD2E7_470E_E14C_6C93;
const PHILOX_M1: u64 = 0xCA5A_8263_9512_1157;
const PHILOX_W0: u64 = 0x9E37_79B9_7F4A_7C15;
const PHILOX_W1: u64 = 0xBB67_AE85_84CA_A73B;

/// Stream identifiers, one per independent purpose.
pub mod streams {
    /// Per-trial setting choice.
    pub const SETTINGS: u64 = 1;
    /// Per-trial hidden-state draw.
    pub const STATE: u64 = 2;
    /// Station-A click jitter.
    pub const JITTER_A: u64 = 3;
    /// Station-B click jitter.
    pub const JITTER_B: u64 = 4;
    /// Coupling quadruple sampling.
    pub const COUPLING: u64 = 5;
}

#[inline]
fn mulhilo(a: u64, b: u64) -> (u64, u64) {
    let p = (a as u128) * (b as u128);
    ((p >> 64) as u64, p as u64)
}

/// One Philox4x64-10 block: 256 bits of counter encrypted under a 128-bit key.
#[inline]
pub fn philox4x64(mut counter: [u64; 4], mut key: [u64; 2]) -> [u64; 4] {
    for round in 0..10 {
        if round > 0 {
            key[0] = key[0].wrapping_add(PHILOX_W0);
            key[1] = key[1].wrapping_add(PHILOX_W1);
        }
        let (hi0, lo0) = mulhilo(PHILOX_M0, counter[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, counter[2]);
        counter = [hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0];
    }
    counter
}

/// Random stream addressed by `(master seed, stream id, index)`.
///
/// Implements [`rand::RngCore`], so it plugs into `rand_distr` samplers.
#[derive(Clone, Debug)]
pub struct SubRng {
    key: [u64; 2],
    index: u64,
    block: u64,
    buf: [u64; 4],
    pos: usize,
}

impl SubRng {
    pub fn new(seed: u64, stream: u64, index: u64) -> Self {
        SubRng {
            key: [seed, stream],
            index,
            block: 0,
            buf: [0; 4],
            pos: 4,
        }
    }

    #[inline]
    fn refill(&mut self) {
        self.buf = philox4x64([self.index, self.block, 0, 0], self.key);
        self.block += 1;
        self.pos = 0;
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for SubRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        if self.pos == 4 {
            self.refill();
        }
        let w = self.buf[self.pos];
        self.pos += 1;
        w
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // The all-ones vector is the canonical Random123 known-answer test for
    // philox4x64 with 10 rounds; the others are cross-checked against
    // numpy.random.Philox (which serves blocks starting at counter + 1).
    #[test]
    fn philox_known_answer_vectors() {
        assert_eq!(
            philox4x64([u64::MAX; 4], [u64::MAX; 2]),
            [
                0x87b0_92c3_013f_e90b,
                0x438c_3c67_be8d_0224,
                0x9cc7_d7c6_9cd7_77b6,
                0xa09c_aebf_594f_0ba0
            ]
        );
        assert_eq!(
            philox4x64([1, 0, 0, 0], [0, 0]),
            [
                0x02f4_ba64_08e4_d89b,
                0x3dd6_2b0b_9ca8_c5b2,
                0x1c86_67a5_5d90_2e79,
                0x907d_7a05_2fd5_b4dc
            ]
        );
        assert_eq!(
            philox4x64(
                [
                    0x0123_4567_89ab_cdf1,
                    0xfedc_ba98_7654_3000,
                    0x0f1e_2d3c_4b5a_6980,
                    0x8796_a5b4_c3d2_e000
                ],
                [0xdead_beef_cafe_b800, 0x0123_4567_89ab_cdf0]
            ),
            [
                0xa447_d660_67ea_fa20,
                0x8c1f_cb56_52af_7e59,
                0xd983_4fd0_9d69_de21,
                0x46ef_a9ba_5ffa_315d
            ]
        );
        assert_eq!(
            philox4x64([43, 0, 0, 0], [7, 13]),
            [
                0xdc01_e0cd_1bdd_439e,
                0xd5d4_4aed_abb6_7d71,
                0x8c07_ab70_3a95_5f6c,
                0x717e_9ec6_731b_7497
            ]
        );
    }

    #[test]
    fn subrng_walks_blocks_in_order() {
        let mut rng = SubRng::new(7, 13, 42);
        let first_block = philox4x64([42, 0, 0, 0], [7, 13]);
        let second_block = philox4x64([42, 1, 0, 0], [7, 13]);
        for w in first_block {
            assert_eq!(rng.next_u64(), w);
        }
        assert_eq!(rng.next_u64(), second_block[0]);
    }

    #[test]
    fn distinct_addresses_give_distinct_output() {
        let a = SubRng::new(1, 2, 3).next_u64();
        assert_ne!(a, SubRng::new(1, 2, 4).next_u64());
        assert_ne!(a, SubRng::new(1, 3, 3).next_u64());
        assert_ne!(a, SubRng::new(2, 2, 3).next_u64());
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut rng = SubRng::new(0xfeed, 1, 0);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
