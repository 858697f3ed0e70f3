//! Domain types shared by every protocol: tags, inventories, ground truth,
//! accuracy requirements and cost accounting.

use std::collections::HashSet;

use crate::error::{MtiError, Result};
use crate::hashing::{self, Prng};

/// Width of a tag ID in bits.
pub const TAG_ID_BITS: u32 = 96;
const TAG_ID_MASK: u128 = (1u128 << TAG_ID_BITS) - 1;

/// `floor(alpha * n)`, guarded against products like `0.29 * 100` landing
/// just below an integer.
pub fn missing_count(n: usize, alpha: f64) -> usize {
    ((alpha * n as f64) + 1e-9).floor().max(0.0) as usize
}

/// A 96-bit tag ID. Bits above 96 are discarded on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TagId(u128);

impl TagId {
    pub fn new(value: u128) -> Self {
        TagId(value & TAG_ID_MASK)
    }

    pub fn value(self) -> u128 {
        self.0
    }

    /// Low 64 bits.
    pub fn lo(self) -> u64 {
        self.0 as u64
    }

    /// High 32 bits, zero-extended.
    pub fn hi(self) -> u64 {
        (self.0 >> 64) as u64
    }
}

/// The reader's view of the tag population: every ID it expects to find,
/// plus the pseudo-IDs derived from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inventory {
    tags: Vec<TagId>,
    pseudo_ids: Vec<u64>,
    pseudo_id_bits: u32,
    pseudo_id_seed: u64,
    pseudo_id_iterations: u32,
}

impl Inventory {
    /// Builds an inventory with the default pseudo-ID length.
    pub fn new(tags: Vec<TagId>, pseudo_id_seed: u64) -> Result<Self> {
        Self::with_pseudo_id_bits(tags, pseudo_id_seed, None)
    }

    /// Builds an inventory, optionally overriding the pseudo-ID length.
    pub fn with_pseudo_id_bits(
        tags: Vec<TagId>,
        pseudo_id_seed: u64,
        bits: Option<u32>,
    ) -> Result<Self> {
        if tags.is_empty() {
            return Err(MtiError::EmptyInventory);
        }
        let mut seen = HashSet::with_capacity(tags.len());
        for t in &tags {
            if !seen.insert(*t) {
                return Err(MtiError::DuplicateTag(t.value()));
            }
        }
        let bits = bits.unwrap_or_else(|| hashing::pseudo_id_bits(tags.len()));
        let assignment = hashing::make_pseudo_ids_with_bits(&tags, pseudo_id_seed, bits)?;
        Ok(Inventory {
            tags,
            pseudo_ids: assignment.ids,
            pseudo_id_bits: assignment.bits,
            pseudo_id_seed: assignment.seed,
            pseudo_id_iterations: assignment.iterations,
        })
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn tags(&self) -> &[TagId] {
        &self.tags
    }

    pub fn pseudo_ids(&self) -> &[u64] {
        &self.pseudo_ids
    }

    pub fn pseudo_id_bits(&self) -> u32 {
        self.pseudo_id_bits
    }

    /// Seed that produced the collision-free pseudo-IDs.
    pub fn pseudo_id_seed(&self) -> u64 {
        self.pseudo_id_seed
    }

    pub fn pseudo_id_iterations(&self) -> u32 {
        self.pseudo_id_iterations
    }
}

/// The set of inventory indices that are actually absent.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    missing: Vec<usize>,
    absent: Vec<bool>,
}

impl GroundTruth {
    /// Builds ground truth over `n` tags from a list of missing indices.
    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut absent = vec![false; n];
        for i in indices {
            if i >= n {
                return Err(MtiError::invalid("missing index", format!("{i} >= {n}")));
            }
            absent[i] = true;
        }
        let missing = absent
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect();
        Ok(GroundTruth { missing, absent })
    }

    /// Sorted missing indices.
    pub fn missing(&self) -> &[usize] {
        &self.missing
    }

    pub fn is_missing(&self, index: usize) -> bool {
        self.absent[index]
    }

    pub fn is_present(&self, index: usize) -> bool {
        !self.absent[index]
    }

    pub fn n(&self) -> usize {
        self.absent.len()
    }

    /// Fraction of the inventory that is missing.
    pub fn alpha(&self) -> f64 {
        if self.absent.is_empty() {
            0.0
        } else {
            self.missing.len() as f64 / self.absent.len() as f64
        }
    }
}

/// `(epsilon, delta)`: with probability at least `1 - delta` the reported
/// set must contain at least `1 - epsilon` of the missing tags.
///
/// `epsilon = 0` selects exhaustive mode, where every tag is checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyRequirement {
    pub epsilon: f64,
    pub delta: f64,
}

impl AccuracyRequirement {
    /// Accepts `epsilon` in `[0, 1]` and `delta` in `[0, 1)`. Use
    /// [`in_bound_range`](Self::in_bound_range) to tell whether the pair lies
    /// inside the window where the complexity bounds apply.
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(MtiError::invalid(
                "epsilon",
                format!("{epsilon} not in [0, 1]"),
            ));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(MtiError::invalid("delta", format!("{delta} not in [0, 1)")));
        }
        Ok(AccuracyRequirement { epsilon, delta })
    }

    pub fn exhaustive() -> Self {
        AccuracyRequirement {
            epsilon: 0.0,
            delta: 0.0,
        }
    }

    pub fn is_exhaustive(&self) -> bool {
        self.epsilon == 0.0
    }

    /// `0 < epsilon <= 1/2` and `0 <= delta < 1/3`.
    pub fn in_bound_range(&self) -> bool {
        self.epsilon > 0.0 && self.epsilon <= 0.5 && self.delta >= 0.0 && self.delta < 1.0 / 3.0
    }

    /// Whether an observed recall satisfies `ratio >= 1 - epsilon`.
    pub fn is_met_by(&self, ratio: f64) -> bool {
        ratio + 1e-12 >= 1.0 - self.epsilon
    }
}

/// Slot durations and link rates used to convert a [`CostLedger`] to
/// seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingModel {
    /// Short slot carrying one bit (s).
    pub t_short: f64,
    /// Slot carrying a full 96-bit tag ID (s).
    pub t_tag: f64,
    /// Long slot carrying a reader broadcast chunk (s).
    pub t_long: f64,
    pub uplink_bps: f64,
    pub downlink_bps: f64,
    /// Fixed cost added to every slot of any kind (s).
    pub per_slot_overhead: f64,
    /// Reader payload bits carried by one long slot.
    pub long_slot_bits: u32,
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            t_short: 0.4e-3,
            t_tag: 2.4e-3,
            t_long: 0.8e-3,
            uplink_bps: 40_000.0,
            downlink_bps: 40_000.0,
            per_slot_overhead: 0.0,
            long_slot_bits: 32,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("t_short", self.t_short),
            ("t_tag", self.t_tag),
            ("t_long", self.t_long),
            ("uplink_bps", self.uplink_bps),
            ("downlink_bps", self.downlink_bps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MtiError::invalid(name, format!("{v} must be > 0")));
            }
        }
        if !(self.per_slot_overhead >= 0.0 && self.per_slot_overhead.is_finite()) {
            return Err(MtiError::invalid("per_slot_overhead", "must be >= 0"));
        }
        if self.long_slot_bits == 0 {
            return Err(MtiError::invalid("long_slot_bits", "must be >= 1"));
        }
        Ok(())
    }
}

/// Slot and bit counts accumulated by one protocol run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostLedger {
    pub short_slots: u64,
    pub long_slots: u64,
    pub tagid_slots: u64,
    /// Bits broadcast by the reader.
    pub reader_bits: u64,
    /// Bits sent by tags; already paid for through slot counts.
    pub tag_bits: u64,
}

impl CostLedger {
    pub fn total_slots(&self) -> u64 {
        self.short_slots + self.long_slots + self.tagid_slots
    }
}

/// Execution time of a ledger in seconds.
///
/// Reader bits are charged at the downlink rate on top of the long slots
/// that carry them; tag bits are covered by the slot durations.
pub fn elapsed_seconds(ledger: &CostLedger, timing: &TimingModel) -> f64 {
    ledger.short_slots as f64 * timing.t_short
        + ledger.tagid_slots as f64 * timing.t_tag
        + ledger.long_slots as f64 * timing.t_long
        + ledger.reader_bits as f64 / timing.downlink_bps
        + ledger.total_slots() as f64 * timing.per_slot_overhead
}

/// Output of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult {
    /// Sorted inventory indices reported missing.
    pub reported_missing: Vec<usize>,
    pub ledger: CostLedger,
    pub elapsed_s: f64,
    /// Tags whose presence was checked.
    pub tags_checked: usize,
    /// Response slots used for verification (leaves for the tree protocol).
    pub observations: u64,
}

impl IdentificationResult {
    pub(crate) fn finish(
        mut reported_missing: Vec<usize>,
        ledger: CostLedger,
        timing: &TimingModel,
        tags_checked: usize,
        observations: u64,
    ) -> Self {
        reported_missing.sort_unstable();
        IdentificationResult {
            reported_missing,
            elapsed_s: elapsed_seconds(&ledger, timing),
            ledger,
            tags_checked,
            observations,
        }
    }
}

/// `|A ∩ B| / |A|` for true missing set `A` and reported set `B`; 1 when `A`
/// is empty.
pub fn accuracy_ratio(truth: &GroundTruth, result: &IdentificationResult) -> f64 {
    let total = truth.missing().len();
    if total == 0 {
        return 1.0;
    }
    let mut reported: Vec<usize> = result.reported_missing.clone();
    reported.sort_unstable();
    reported.dedup();
    let hits = reported
        .iter()
        .filter(|&&i| i < truth.n() && truth.is_missing(i))
        .count();
    hits as f64 / total as f64
}

/// Marks `floor(alpha * n)` distinct indices missing, uniformly at random.
pub fn make_ground_truth(n: usize, alpha: f64, rng: &mut Prng) -> Result<GroundTruth> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MtiError::invalid("alpha", format!("{alpha} not in [0, 1]")));
    }
    let k = missing_count(n, alpha).min(n);
    // Partial Fisher-Yates.
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.next_below(n - i);
        pool.swap(i, j);
    }
    GroundTruth::from_indices(n, pool[..k].iter().copied())
}
