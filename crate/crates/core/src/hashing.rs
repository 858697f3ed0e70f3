//! Keyed hashing, pseudo-ID construction and the simulation PRNG.
//!
//! Everything here is built on one 64-bit finalizer with fixed constants, so
//! hash values and random streams are bit-identical across platforms.

use crate::error::{MtiError, Result};
use crate::model::TagId;

/// Increment applied to the PRNG state on every draw.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seeds tried by [`make_pseudo_ids`] before giving up.
pub const MAX_PSEUDO_ID_ITERATIONS: u32 = 64;

/// Bijective 64-bit mixing function.
#[inline]
pub fn finalize64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

/// Hash of a 96-bit tag ID under `seed`.
#[inline]
pub fn keyed_hash(id: TagId, seed: u64) -> u64 {
    keyed_hash_premixed(id, finalize64(seed))
}

/// [`keyed_hash`] with the seed already passed through [`finalize64`].
///
/// Frame-based protocols hash thousands of tags under one seed; mixing the
/// seed once per frame halves the work.
#[inline]
pub fn keyed_hash_premixed(id: TagId, mixed_seed: u64) -> u64 {
    finalize64(finalize64(mixed_seed ^ id.lo()) ^ id.hi())
}

/// Maps a 64-bit hash onto `0..n` by a multiply-shift.
#[inline]
pub fn reduce(hash: u64, n: usize) -> usize {
    ((hash as u128 * n as u128) >> 64) as usize
}

/// Pseudo-ID length for an inventory of `n` tags: `max(2, 2 * ceil(log2 n))`.
pub fn pseudo_id_bits(n: usize) -> u32 {
    (2 * ceil_log2(n as u64)).max(2)
}

/// `ceil(log2 x)`, with `ceil_log2(0) = ceil_log2(1) = 0`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// A collision-free pseudo-ID assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoIdAssignment {
    /// One value per tag; only the low `bits` bits may be set.
    pub ids: Vec<u64>,
    pub bits: u32,
    /// Seed that produced `ids`.
    pub seed: u64,
    /// 1-based number of seeds tried.
    pub iterations: u32,
}

/// Derives distinct pseudo-IDs of the default length for `tags`.
///
/// The pseudo-ID of a tag is the low `L` bits of its keyed hash. On any
/// collision the seed is incremented and every tag is rehashed.
pub fn make_pseudo_ids(tags: &[TagId], initial_seed: u64) -> Result<PseudoIdAssignment> {
    make_pseudo_ids_with_bits(tags, initial_seed, pseudo_id_bits(tags.len()))
}

/// [`make_pseudo_ids`] with an explicit pseudo-ID length.
pub fn make_pseudo_ids_with_bits(
    tags: &[TagId],
    initial_seed: u64,
    bits: u32,
) -> Result<PseudoIdAssignment> {
    if tags.is_empty() {
        return Err(MtiError::EmptyInventory);
    }
    if !(1..=64).contains(&bits) {
        return Err(MtiError::invalid(
            "pseudo_id_bits",
            format!("{bits} not in 1..=64"),
        ));
    }
    if bits < 64 && (tags.len() as u128) > (1u128 << bits) {
        return Err(MtiError::invalid(
            "pseudo_id_bits",
            format!("{bits} bits cannot distinguish {} tags", tags.len()),
        ));
    }
    let mask = if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    };
    let mut ids = Vec::with_capacity(tags.len());
    let mut scratch = Vec::with_capacity(tags.len());
    for iteration in 1..=MAX_PSEUDO_ID_ITERATIONS {
        let seed = initial_seed.wrapping_add(u64::from(iteration - 1));
        let mixed = finalize64(seed);
        ids.clear();
        ids.extend(tags.iter().map(|&t| keyed_hash_premixed(t, mixed) & mask));
        scratch.clear();
        scratch.extend_from_slice(&ids);
        scratch.sort_unstable();
        if scratch.windows(2).all(|w| w[0] != w[1]) {
            return Ok(PseudoIdAssignment {
                ids,
                bits,
                seed,
                iterations: iteration,
            });
        }
    }
    Err(MtiError::PseudoIdExhausted(MAX_PSEUDO_ID_ITERATIONS))
}

/// Counter-based generator: the state advances by [`GOLDEN_GAMMA`] and each
/// output is the finalized state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prng {
    pub state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let (value, next) = prng_next(self.state);
        self.state = next;
        value
    }

    /// Uniform draw in `0..n` (multiply-shift reduction). `n` must be > 0.
    #[inline]
    pub fn next_below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        reduce(self.next_u64(), n)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// One PRNG step: returns the output and the successor state.
#[inline]
pub fn prng_next(state: u64) -> (u64, u64) {
    let next = state.wrapping_add(GOLDEN_GAMMA);
    (finalize64(next), next)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_values() {
        let cases = [
            (0, 0),
            (1, 0),
            (2, 1),
            (3, 2),
            (4, 2),
            (5, 3),
            (1024, 10),
            (1025, 11),
        ];
        for (x, want) in cases {
            assert_eq!(ceil_log2(x), want, "ceil_log2({x})");
        }
    }

    #[test]
    fn pseudo_id_length_floor() {
        assert_eq!(pseudo_id_bits(1), 2);
        assert_eq!(pseudo_id_bits(2), 2);
        assert_eq!(pseudo_id_bits(3), 4);
        assert_eq!(pseudo_id_bits(50_000), 32);
        assert_eq!(pseudo_id_bits(100_000), 34);
    }

    #[test]
    fn single_tag_needs_one_iteration() {
        for seed in [0, 1, u64::MAX] {
            let a = make_pseudo_ids(&[TagId::new(7)], seed).unwrap();
            assert_eq!(a.iterations, 1);
            assert_eq!(a.bits, 2);
            assert!(a.ids[0] < 4);
        }
    }

    #[test]
    fn rejects_empty_and_bad_lengths() {
        assert_eq!(make_pseudo_ids(&[], 0), Err(MtiError::EmptyInventory));
        let tags: Vec<_> = (0..5).map(TagId::new).collect();
        assert!(make_pseudo_ids_with_bits(&tags, 0, 0).is_err());
        assert!(make_pseudo_ids_with_bits(&tags, 0, 2).is_err());
        assert!(make_pseudo_ids_with_bits(&tags, 0, 65).is_err());
    }

    #[test]
    fn retries_past_a_forced_collision() {
        // Find an id whose low 8 hash bits match id 0 under seed 0.
        let s0 = 0u64;
        let target = keyed_hash(TagId::new(0), s0) & 0xFF;
        let partner = (1u128..)
            .find(|&v| keyed_hash(TagId::new(v), s0) & 0xFF == target)
            .unwrap();
        let tags = [TagId::new(0), TagId::new(partner)];
        let a = make_pseudo_ids_with_bits(&tags, s0, 8).unwrap();
        assert!(a.iterations >= 2);
        assert_ne!(a.ids[0], a.ids[1]);
        assert_eq!(a.seed, s0 + u64::from(a.iterations) - 1);
    }

    #[test]
    fn prng_streams_are_reproducible() {
        let mut a = Prng::new(99);
        let mut b = Prng::new(99);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = Prng::new(5);
        for _ in 0..10_000 {
            let x = c.next_f64();
            assert!((0.0..1.0).contains(&x));
            assert!(c.next_below(7) < 7);
        }
    }
}
