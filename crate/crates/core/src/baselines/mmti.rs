//! MMTI: multi-seed framed ALOHA that verifies singleton slots only.
//!
//! Each frame the reader evaluates several candidate seeds, keeps the one
//! producing the most singleton slots, and broadcasts that seed with an
//! `f`-bit bitmap marking the singleton slots. Only those slots are
//! executed; each verifies one tag by busy/empty.

use super::{frame_header_bits, frame_length, BaselineConfig, Buckets, Session};
use crate::error::Result;
use crate::hashing::{finalize64, keyed_hash_premixed, reduce, Prng};
use crate::model::{
    AccuracyRequirement, GroundTruth, IdentificationResult, Inventory, TagId, TimingModel,
};

/// Outcome of the per-frame seed search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedChoice {
    /// Position of the winning seed in the candidate list (first on ties).
    pub index: usize,
    pub seed: u64,
    /// Singleton-slot count of every candidate.
    pub singletons: Vec<usize>,
}

/// Picks the candidate seed that leaves the most singleton slots when the
/// `remaining` tags are hashed into `f` slots.
pub fn choose_seed(
    tags: &[TagId],
    remaining: &[usize],
    f: usize,
    candidates: &[u64],
) -> SeedChoice {
    assert!(!candidates.is_empty(), "need at least one candidate seed");
    let mut counts = vec![0u8; f];
    let singletons: Vec<usize> = candidates
        .iter()
        .map(|&seed| {
            counts.iter_mut().for_each(|c| *c = 0);
            let mixed = finalize64(seed);
            for &t in remaining {
                let slot = reduce(keyed_hash_premixed(tags[t], mixed), f);
                counts[slot] = counts[slot].saturating_add(1);
            }
            counts.iter().filter(|&&c| c == 1).count()
        })
        .collect();
    let mut index = 0;
    for (i, &s) in singletons.iter().enumerate() {
        if s > singletons[index] {
            index = i;
        }
    }
    SeedChoice {
        index,
        seed: candidates[index],
        singletons,
    }
}

pub fn run_mmti(
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
    let mut candidates = vec![0u64; config.mmti_candidates];
    while !s.done() {
        let f = frame_length(s.remaining.len(), 1.0);
        candidates.iter_mut().for_each(|c| *c = rng.next_u64());
        let choice = choose_seed(inventory.tags(), &s.remaining, f, &candidates);
        let buckets = Buckets::fill(inventory.tags(), &s.remaining, finalize64(choice.seed), f);
        // The bitmap stops after the last slot actually executed.
        let mut bitmap_len = 0;
        for slot in 0..f {
            if s.done() {
                break;
            }
            if let [tag] = *buckets.members(slot) {
                s.probe(tag)?;
                bitmap_len = slot as u64 + 1;
            }
        }
        s.charge_broadcast(frame_header_bits(f) + bitmap_len);
        s.end_frame()?;
    }
    Ok(s.finish())
}
