//! SFMTI: framed ALOHA that reconciles small collision slots.
//!
//! Every 2- or 3-collision slot gets a secondary seed, searched over a
//! bounded number of tries, under which its members land in distinct
//! sub-slots. The reader broadcasts a 2-bit class per slot and the
//! secondary-seed index of each reconciled slot. Singletons and reconciled
//! sub-slots are then verified by busy/empty.

use super::{frame_header_bits, frame_length, BaselineConfig, Buckets, Session};
use crate::error::Result;
use crate::hashing::{ceil_log2, finalize64, keyed_hash_premixed, reduce, Prng};
use crate::model::{
    AccuracyRequirement, GroundTruth, IdentificationResult, Inventory, TagId, TimingModel,
};

/// Class code broadcast for one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotClass {
    Empty,
    Singleton(usize),
    /// Members in sub-slot order and the secondary-seed index that separates
    /// them.
    Reconciled {
        members: Vec<usize>,
        try_index: u32,
    },
    Skip,
}

/// Reader-side plan of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfmtiFrame {
    pub seed: u64,
    pub classes: Vec<SlotClass>,
    pub try_bits: u32,
}

impl SfmtiFrame {
    /// Length of the class vector: two bits per slot.
    pub fn filter_bits(&self) -> u64 {
        2 * self.classes.len() as u64
    }

    pub fn reconciled_slots(&self) -> usize {
        self.classes
            .iter()
            .filter(|c| matches!(c, SlotClass::Reconciled { .. }))
            .count()
    }

    /// Total reader broadcast: header, filter vector and one secondary-seed
    /// index per reconciled slot.
    pub fn broadcast_bits(&self) -> u64 {
        frame_header_bits(self.classes.len())
            + self.filter_bits()
            + self.reconciled_slots() as u64 * u64::from(self.try_bits)
    }
}

fn sub_seed(frame_seed: u64, slot: usize, try_index: u32) -> u64 {
    finalize64(frame_seed ^ finalize64(((slot as u64) << 8) | u64::from(try_index) | 1 << 63))
}

/// Hashes `remaining` into `f` slots and classifies every slot.
pub fn plan_sfmti_frame(
    tags: &[TagId],
    remaining: &[usize],
    f: usize,
    seed: u64,
    tries: u32,
) -> SfmtiFrame {
    let buckets = Buckets::fill(tags, remaining, finalize64(seed), f);
    let classes = (0..f)
        .map(|slot| match buckets.counts[slot] {
            0 => SlotClass::Empty,
            1 => SlotClass::Singleton(buckets.members(slot)[0]),
            2 | 3 => reconcile(tags, buckets.members(slot), seed, slot, tries),
            _ => SlotClass::Skip,
        })
        .collect();
    SfmtiFrame {
        seed,
        classes,
        try_bits: ceil_log2(u64::from(tries)),
    }
}

fn reconcile(tags: &[TagId], members: &[usize], seed: u64, slot: usize, tries: u32) -> SlotClass {
    let k = members.len();
    for try_index in 0..tries {
        let mixed = finalize64(sub_seed(seed, slot, try_index));
        let mut order = [usize::MAX; 3];
        let mut clash = false;
        for &m in members {
            let sub = reduce(keyed_hash_premixed(tags[m], mixed), k);
            if order[sub] != usize::MAX {
                clash = true;
                break;
            }
            order[sub] = m;
        }
        if !clash {
            return SlotClass::Reconciled {
                members: order[..k].to_vec(),
                try_index,
            };
        }
    }
    SlotClass::Skip
}

pub fn run_sfmti(
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
    while !s.done() {
        let f = frame_length(s.remaining.len(), 1.0);
        let frame = plan_sfmti_frame(
            inventory.tags(),
            &s.remaining,
            f,
            rng.next_u64(),
            config.sfmti_tries,
        );
        s.charge_broadcast(frame.broadcast_bits());
        'slots: for class in &frame.classes {
            match class {
                SlotClass::Singleton(tag) => {
                    if s.done() {
                        break;
                    }
                    s.probe(*tag)?;
                }
                SlotClass::Reconciled { members, .. } => {
                    for &tag in members {
                        if s.done() {
                            break 'slots;
                        }
                        s.probe(tag)?;
                    }
                }
                SlotClass::Empty | SlotClass::Skip => {}
            }
        }
        s.end_frame()?;
    }
    Ok(s.finish())
}

#[cfg(test)]
mod tests {
    use super::super::tests::inventory;
    use super::*;
    use crate::model::make_ground_truth;

    #[test]
    fn filter_vector_is_two_bits_per_slot() {
        let inv = inventory(1000, 0);
        let remaining: Vec<usize> = (0..1000).collect();
        for f in [1, 7, 1000] {
            let frame = plan_sfmti_frame(inv.tags(), &remaining, f, 3, 16);
            assert_eq!(frame.filter_bits(), 2 * f as u64);
        }
    }

    #[test]
    fn plan_covers_each_tag_once() {
        let inv = inventory(1000, 0);
        let remaining: Vec<usize> = (0..1000).collect();
        let frame = plan_sfmti_frame(inv.tags(), &remaining, 1000, 99, 16);
        let mut seen = vec![false; 1000];
        for c in &frame.classes {
            let tags: Vec<usize> = match c {
                SlotClass::Singleton(t) => vec![*t],
                SlotClass::Reconciled { members, try_index } => {
                    assert!(*try_index < 16);
                    assert!(members.len() == 2 || members.len() == 3);
                    members.clone()
                }
                _ => vec![],
            };
            for t in tags {
                assert!(!std::mem::replace(&mut seen[t], true));
            }
        }
        // Most tags are schedulable in a load-1 frame.
        assert!(seen.iter().filter(|&&s| s).count() > 800);
    }

    #[test]
    fn exhaustive_mode_is_exact() {
        for (n, alpha) in [(1, 1.0), (5, 0.0), (300, 0.5), (2048, 0.01)] {
            let inv = inventory(n, 7);
            let mut rng = Prng::new(n as u64 + 1);
            let truth = make_ground_truth(n, alpha, &mut rng).unwrap();
            let res = run_sfmti(
                &inv,
                &truth,
                &AccuracyRequirement::exhaustive(),
                alpha,
                &mut rng,
                &TimingModel::default(),
                &BaselineConfig::default(),
            )
            .unwrap();
            assert_eq!(res.reported_missing, truth.missing());
        }
    }
}
