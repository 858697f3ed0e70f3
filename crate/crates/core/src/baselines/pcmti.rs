//! PCMTI: pair-reply framed ALOHA that keeps only 2-collision slots.
//!
//! A natural 2-collision slot becomes a Manchester pair slot. Singleton slots
//! are merged two at a time, in slot order, into synthetic pair slots; an odd
//! leftover singleton is probed on its own. Slots with three or more tags are
//! left for the next frame. The reader broadcasts, for every retained
//! original slot, its `ceil(log2 f)`-bit index, plus the reply-bit position
//! of each pair.

use super::{differing_bit, frame_header_bits, frame_length, BaselineConfig, Buckets, Session};
use crate::error::Result;
use crate::hashing::{ceil_log2, finalize64, keyed_hash_premixed, reduce, Prng};
use crate::model::{
    AccuracyRequirement, GroundTruth, IdentificationResult, Inventory, TagId, TimingModel,
};

pub fn run_pcmti(
    inventory: &Inventory,
    truth: &GroundTruth,
    requirement: &AccuracyRequirement,
    expected_alpha: f64,
    rng: &mut Prng,
    timing: &TimingModel,
    config: &BaselineConfig,
) -> Result<IdentificationResult> {
    let mut s = Session::new(
        inventory,
        truth,
        requirement,
        expected_alpha,
        timing,
        config,
    )?;
    let index_bits = u64::from(ceil_log2(u64::from(inventory.pseudo_id_bits())));
    while !s.done() {
        let rem = s.remaining.len();
        // A load factor above 2 could leave every slot over-full forever.
        let f = frame_length(rem, config.rho_hat).max(rem.div_ceil(2));
        let mixed = finalize64(rng.next_u64());
        let buckets = Buckets::fill(inventory.tags(), &s.remaining, mixed, f);
        let map_bits = u64::from(ceil_log2(f as u64));
        let mut bits = frame_header_bits(f);
        let mut pending: Option<usize> = None;
        for slot in 0..f {
            if s.done() {
                break;
            }
            match *buckets.members(slot) {
                [a, b] => {
                    bits += map_bits + index_bits;
                    s.pair(a, b, differing_bit(s.pseudo_id(a), s.pseudo_id(b)))?;
                }
                [a] => match pending.take() {
                    Some(p) => {
                        bits += 2 * map_bits + index_bits;
                        s.pair(p, a, differing_bit(s.pseudo_id(p), s.pseudo_id(a)))?;
                    }
                    None => pending = Some(a),
                },
                _ => {}
            }
        }
        if let Some(p) = pending {
            if !s.done() {
                bits += map_bits;
                s.probe(p)?;
            }
        }
        s.charge_broadcast(bits);
        s.end_frame()?;
    }
    Ok(s.finish())
}

/// Slot-type tallies of one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotTypeCounts {
    /// Slots holding exactly one tag, which is missing.
    pub missing_alone: u64,
    /// Slots holding one missing and one present tag.
    pub missing_and_present: u64,
    /// Slots holding two missing tags.
    pub two_missing: u64,
    pub slots: u64,
}

impl SlotTypeCounts {
    pub fn add(&mut self, other: &SlotTypeCounts) {
        self.missing_alone += other.missing_alone;
        self.missing_and_present += other.missing_and_present;
        self.two_missing += other.two_missing;
        self.slots += other.slots;
    }
}

/// Hashes every tag into `f` slots under `seed` and tallies the slot types
/// that carry missing-tag information.
pub fn classify_frame(tags: &[TagId], truth: &GroundTruth, seed: u64, f: usize) -> SlotTypeCounts {
    let mixed = finalize64(seed);
    // Per slot: total count and missing count, saturating well above 2.
    let mut total = vec![0u8; f];
    let mut missing = vec![0u8; f];
    for (i, &tag) in tags.iter().enumerate() {
        let slot = reduce(keyed_hash_premixed(tag, mixed), f);
        total[slot] = total[slot].saturating_add(1);
        if truth.is_missing(i) {
            missing[slot] = missing[slot].saturating_add(1);
        }
    }
    let mut out = SlotTypeCounts {
        slots: f as u64,
        ..Default::default()
    };
    for (&t, &m) in total.iter().zip(&missing) {
        match (t, m) {
            (1, 1) => out.missing_alone += 1,
            (2, 1) => out.missing_and_present += 1,
            (2, 2) => out.two_missing += 1,
            _ => {}
        }
    }
    out
}

/// Elapsed time of one PCMTI run per candidate load factor, each run seeded
/// identically. Used to look for the best `rho_hat`.
pub fn pcmti_rho_sweep(
    inventory: &Inventory,
    truth: &GroundTruth,
    requirement: &AccuracyRequirement,
    expected_alpha: f64,
    rhos: &[f64],
    seed: u64,
    timing: &TimingModel,
) -> Result<Vec<(f64, f64)>> {
    rhos.iter()
        .map(|&rho| {
            let config = BaselineConfig {
                rho_hat: rho,
                ..Default::default()
            };
            let res = run_pcmti(
                inventory,
                truth,
                requirement,
                expected_alpha,
                &mut Prng::new(seed),
                timing,
                &config,
            )?;
            Ok((rho, res.elapsed_s))
        })
        .collect()
}
