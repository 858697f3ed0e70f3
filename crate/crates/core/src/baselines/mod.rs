//! Comparison protocols: polling and three framed-ALOHA schemes.
//!
//! The framed protocols share one skeleton. Each frame hashes the still
//! unverified tags into `f` slots under a fresh seed, the reader broadcasts
//! which slots to execute, and the tags in those slots are verified by
//! busy/empty or Manchester observations. Frames repeat until the sampling
//! budget from [`required_checks`](crate::stats::required_checks) is covered
//! or every tag has been verified.

mod mmti;
mod pcmti;
mod sfmti;

pub use mmti::{choose_seed, run_mmti, SeedChoice};
pub use pcmti::{classify_frame, pcmti_rho_sweep, run_pcmti, SlotTypeCounts};
pub use sfmti::{plan_sfmti_frame, run_sfmti, SfmtiFrame, SlotClass};

use crate::channel::{self, SlotObservation};
use crate::error::{MtiError, Result};
use crate::hashing::{ceil_log2, keyed_hash_premixed, reduce};
use crate::model::{
    AccuracyRequirement, CostLedger, GroundTruth, IdentificationResult, Inventory, TagId,
    TimingModel,
};
use crate::stats::required_checks;

/// Tunables of the framed protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// PCMTI load factor: frame length is `ceil(remaining / rho_hat)`.
    pub rho_hat: f64,
    /// Candidate seeds MMTI evaluates per frame.
    pub mmti_candidates: usize,
    /// Secondary seeds SFMTI tries per collision slot.
    pub sfmti_tries: u32,
    /// Frames after which a run is abandoned with an error.
    pub max_frames: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            rho_hat: 1.0,
            mmti_candidates: 8,
            sfmti_tries: 16,
            max_frames: 100_000,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_hat > 0.0 && self.rho_hat.is_finite()) {
            return Err(MtiError::invalid(
                "rho_hat",
                format!("{} must be > 0", self.rho_hat),
            ));
        }
        if self.mmti_candidates == 0 {
            return Err(MtiError::invalid(
                "mmti_candidates",
                "need at least one candidate seed",
            ));
        }
        if self.sfmti_tries == 0 {
            return Err(MtiError::invalid("sfmti_tries", "need at least one try"));
        }
        if self.max_frames == 0 {
            return Err(MtiError::invalid("max_frames", "must be >= 1"));
        }
        Ok(())
    }
}

/// Bits of the per-frame header: a 32-bit seed and the frame length.
pub(crate) fn frame_header_bits(f: usize) -> u64 {
    32 + u64::from(ceil_log2(f as u64 + 1))
}

/// Frame length `ceil(remaining / rho)`, at least 1.
pub(crate) fn frame_length(remaining: usize, rho: f64) -> usize {
    ((remaining as f64 / rho).ceil() as usize).max(1)
}

// ---------------------------------------------------------------------------
// Polling
// ---------------------------------------------------------------------------

/// Interrogates every tag by ID: one tag-ID slot and one short response slot
/// per tag. Exact by construction.
pub fn run_polling(
    inventory: &Inventory,
    truth: &GroundTruth,
    timing: &TimingModel,
) -> Result<IdentificationResult> {
    check_sizes(inventory, truth)?;
    let mut ledger = CostLedger::default();
    let mut reported = Vec::new();
    for tag in 0..inventory.len() {
        ledger.tagid_slots += 1;
        let responses: &[bool] = if truth.is_present(tag) { &[true] } else { &[] };
        channel::charge_response(&mut ledger, responses.len() as u64);
        if channel::transmit_slot(responses) == SlotObservation::Empty {
            reported.push(tag);
        }
    }
    let n = inventory.len();
    Ok(IdentificationResult::finish(
        reported, ledger, timing, n, n as u64,
    ))
}

fn check_sizes(inventory: &Inventory, truth: &GroundTruth) -> Result<()> {
    if truth.n() != inventory.len() {
        return Err(MtiError::ContractViolation(format!(
            "ground truth covers {} tags, inventory has {}",
            truth.n(),
            inventory.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared frame machinery
// ---------------------------------------------------------------------------

/// Slot occupancy of one frame. Up to three members per slot are kept; the
/// count saturates at 255.
pub(crate) struct Buckets {
    pub counts: Vec<u8>,
    pub members: Vec<[usize; 3]>,
}

impl Buckets {
    pub fn fill(tags: &[TagId], remaining: &[usize], mixed_seed: u64, f: usize) -> Self {
        let mut counts = vec![0u8; f];
        let mut members = vec![[usize::MAX; 3]; f];
        for &tag in remaining {
            let slot = reduce(keyed_hash_premixed(tags[tag], mixed_seed), f);
            let c = counts[slot];
            if (c as usize) < 3 {
                members[slot][c as usize] = tag;
            }
            counts[slot] = c.saturating_add(1);
        }
        Buckets { counts, members }
    }

    pub fn members(&self, slot: usize) -> &[usize] {
        let c = (self.counts[slot] as usize).min(3);
        &self.members[slot][..c]
    }
}

/// Bookkeeping of one framed run: verified tags, budget and cost.
pub(crate) struct Session<'a> {
    pub inventory: &'a Inventory,
    truth: &'a GroundTruth,
    timing: &'a TimingModel,
    budget: usize,
    max_frames: usize,
    verified: Vec<bool>,
    pub remaining: Vec<usize>,
    reported: Vec<usize>,
    checked: usize,
    observations: u64,
    frames: usize,
    pub ledger: CostLedger,
}

impl<'a> Session<'a> {
    pub fn new(
        inventory: &'a Inventory,
        truth: &'a GroundTruth,
        requirement: &AccuracyRequirement,
        expected_alpha: f64,
        timing: &'a TimingModel,
        config: &BaselineConfig,
    ) -> Result<Self> {
        check_sizes(inventory, truth)?;
        config.validate()?;
        let n = inventory.len();
        Ok(Session {
            inventory,
            truth,
            timing,
            budget: required_checks(n, expected_alpha, requirement),
            max_frames: config.max_frames,
            verified: vec![false; n],
            remaining: (0..n).collect(),
            reported: Vec::new(),
            checked: 0,
            observations: 0,
            frames: 0,
            ledger: CostLedger::default(),
        })
    }

    pub fn done(&self) -> bool {
        self.checked >= self.budget || self.remaining.is_empty()
    }

    pub fn is_present(&self, tag: usize) -> bool {
        self.truth.is_present(tag)
    }

    pub fn pseudo_id(&self, tag: usize) -> u64 {
        self.inventory.pseudo_ids()[tag]
    }

    /// Records a presence verdict. A tag is verified at most once.
    pub fn verify(&mut self, tag: usize, present: bool) -> Result<()> {
        if std::mem::replace(&mut self.verified[tag], true) {
            return Err(MtiError::ContractViolation(format!(
                "tag {tag} verified twice"
            )));
        }
        self.checked += 1;
        if !present {
            self.reported.push(tag);
        }
        Ok(())
    }

    /// Executes a presence-probe slot for a lone tag.
    pub fn probe(&mut self, tag: usize) -> Result<()> {
        let responses: &[bool] = if self.is_present(tag) { &[true] } else { &[] };
        channel::charge_response(&mut self.ledger, responses.len() as u64);
        self.observations += 1;
        let seen = channel::transmit_slot(responses) != SlotObservation::Empty;
        self.verify(tag, seen)
    }

    /// Executes a Manchester pair slot in which `a` and `b` reply with their
    /// pseudo-ID bit `bit` (on which they differ).
    pub fn pair(&mut self, a: usize, b: usize, bit: u32) -> Result<()> {
        let reply = |tag: usize| (self.pseudo_id(tag) >> bit) & 1 == 1;
        let (ra, rb) = (reply(a), reply(b));
        let mut responses = Vec::with_capacity(2);
        if self.is_present(a) {
            responses.push(ra);
        }
        if self.is_present(b) {
            responses.push(rb);
        }
        channel::charge_response(&mut self.ledger, responses.len() as u64);
        self.observations += 1;
        let (pa, pb) = channel::decode_pair(channel::transmit_slot(&responses), ra, rb)?;
        self.verify(a, pa)?;
        self.verify(b, pb)
    }

    pub fn charge_broadcast(&mut self, bits: u64) {
        channel::charge_query_with(&mut self.ledger, bits, self.timing.long_slot_bits);
    }

    pub fn end_frame(&mut self) -> Result<()> {
        let verified = &self.verified;
        self.remaining.retain(|&t| !verified[t]);
        self.frames += 1;
        if self.frames >= self.max_frames && !self.done() {
            return Err(MtiError::Protocol(format!(
                "{} tags still unverified after {} frames",
                self.remaining.len(),
                self.frames
            )));
        }
        Ok(())
    }

    pub fn finish(self) -> IdentificationResult {
        IdentificationResult::finish(
            self.reported,
            self.ledger,
            self.timing,
            self.checked,
            self.observations,
        )
    }
}

/// Lowest pseudo-ID bit on which two distinct pseudo-IDs differ.
pub(crate) fn differing_bit(a: u64, b: u64) -> u32 {
    debug_assert_ne!(a, b);
    (a ^ b).trailing_zeros()
}
