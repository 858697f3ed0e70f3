//! Collision-partition tree (CPT) protocol.
//!
//! 1. Every tag gets a short pseudo-ID (see [`crate::hashing`]).
//! 2. The reader builds a binary tree whose internal nodes test one
//!    pseudo-ID bit each, chosen to split the remaining tags as evenly as
//!    possible, until every leaf holds one or two tags.
//! 3. Leaves are parsed one per slot. The reader broadcasts only the change
//!    of path since the previous leaf plus a probe bit on which the leaf's
//!    two tags differ; both tags answer in the same slot and Manchester
//!    decoding tells which of them is present.

mod query;
mod tree;

pub use query::{
    delta_encode, plan_traversal, Directive, PlannedLeaf, QueryMessage, TagCursor, TraversalOrder,
};
pub use tree::{bit_of, build_cpt, Cpt, CptNode, Leaf};

use crate::channel::{self, SlotObservation};
use crate::error::{MtiError, Result};
use crate::hashing::Prng;
use crate::model::{
    AccuracyRequirement, CostLedger, GroundTruth, IdentificationResult, Inventory, TimingModel,
};
use crate::stats::required_checks;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CptConfig {
    pub order: TraversalOrder,
}

/// Probes one leaf and returns the indices found missing. Charges one
/// response slot.
pub fn leaf_check(
    leaf: &Leaf,
    pseudo_ids: &[u64],
    truth: &GroundTruth,
    ledger: &mut CostLedger,
) -> Result<Vec<usize>> {
    let probe = leaf.probe_bit();
    let reply = |tag: usize| bit_of(pseudo_ids[tag], probe);
    let responses: Vec<bool> = leaf
        .tags()
        .iter()
        .filter(|&&t| truth.is_present(t))
        .map(|&t| reply(t))
        .collect();
    channel::charge_response(ledger, responses.len() as u64);
    let obs = channel::transmit_slot(&responses);
    match *leaf.tags() {
        [tag] => match obs {
            SlotObservation::Empty => Ok(vec![tag]),
            SlotObservation::Single(_) => Ok(vec![]),
            other => Err(MtiError::Protocol(format!("{other:?} in a singleton leaf"))),
        },
        [a, b] => {
            let (a_present, b_present) = channel::decode_pair(obs, reply(a), reply(b))?;
            let mut missing = Vec::new();
            if !a_present {
                missing.push(a);
            }
            if !b_present {
                missing.push(b);
            }
            Ok(missing)
        }
        _ => unreachable!("leaves hold one or two tags"),
    }
}

/// Runs the CPT protocol on one instance.
///
/// The reader checks a contiguous run of leaves in traversal order, starting
/// at a uniformly random leaf and wrapping around, until the number of tags
/// covered reaches [`required_checks`]. An exhaustive requirement starts at
/// the first leaf and parses the whole tree.
pub fn run_cpt(
    inventory: &Inventory,
    truth: &GroundTruth,
    requirement: &AccuracyRequirement,
    expected_alpha: f64,
    rng: &mut Prng,
    timing: &TimingModel,
    config: &CptConfig,
) -> Result<IdentificationResult> {
    if truth.n() != inventory.len() {
        return Err(MtiError::ContractViolation(format!(
            "ground truth covers {} tags, inventory has {}",
            truth.n(),
            inventory.len()
        )));
    }
    let bits = inventory.pseudo_id_bits();
    let tree = build_cpt(inventory.pseudo_ids(), bits, rng)?;
    let plan = plan_traversal(&tree, config.order);

    let n = inventory.len();
    let budget = required_checks(n, expected_alpha, requirement);
    let start = if budget >= n {
        0
    } else {
        rng.next_below(plan.len())
    };

    let mut ledger = CostLedger::default();
    let mut reported = Vec::new();
    let mut checked = 0usize;
    let mut parsed = 0u64;
    let mut prev: Option<&[Directive]> = None;
    for step in 0..plan.len() {
        if checked >= budget {
            break;
        }
        let planned = &plan[(start + step) % plan.len()];
        let msg = delta_encode(
            prev,
            &planned.path,
            planned.leaf.probe_bit(),
            bits,
            tree.h_max,
        );
        channel::charge_query_with(&mut ledger, msg.encoded_bits(), timing.long_slot_bits);
        reported.extend(leaf_check(
            &planned.leaf,
            inventory.pseudo_ids(),
            truth,
            &mut ledger,
        )?);
        checked += planned.leaf.len();
        parsed += 1;
        prev = Some(&planned.path);
    }
    Ok(IdentificationResult::finish(
        reported, ledger, timing, checked, parsed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TagId;

    fn inventory(n: usize, seed: u64) -> Inventory {
        let tags = (0..n as u128).map(|i| TagId::new(i * 7919 + 13)).collect();
        Inventory::new(tags, seed).unwrap()
    }

    #[test]
    fn pair_leaf_outcomes() {
        // Tag 0 replies 0, tag 1 replies 1 at the distinguishing bit 0.
        let ids = [0b10, 0b11];
        let leaf = Leaf::pair(0, 1, 0);
        let mut ledger = CostLedger::default();

        let both = GroundTruth::from_indices(2, []).unwrap();
        assert!(leaf_check(&leaf, &ids, &both, &mut ledger)
            .unwrap()
            .is_empty());

        let zero_missing = GroundTruth::from_indices(2, [0]).unwrap();
        assert_eq!(
            leaf_check(&leaf, &ids, &zero_missing, &mut ledger).unwrap(),
            vec![0]
        );

        let none = GroundTruth::from_indices(2, [0, 1]).unwrap();
        assert_eq!(
            leaf_check(&leaf, &ids, &none, &mut ledger).unwrap(),
            vec![0, 1]
        );
        assert_eq!(ledger.short_slots, 3);
        assert_eq!(ledger.tag_bits, 3);
    }

    #[test]
    fn singleton_leaf_outcomes() {
        let ids = [0b1];
        let leaf = Leaf::single(0);
        let mut ledger = CostLedger::default();
        let gone = GroundTruth::from_indices(1, [0]).unwrap();
        assert_eq!(
            leaf_check(&leaf, &ids, &gone, &mut ledger).unwrap(),
            vec![0]
        );
        let here = GroundTruth::from_indices(1, []).unwrap();
        assert!(leaf_check(&leaf, &ids, &here, &mut ledger)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn exhaustive_run_reports_exactly_the_missing_set() {
        let inv = inventory(300, 5);
        let mut rng = Prng::new(8);
        let truth = crate::model::make_ground_truth(300, 0.1, &mut rng).unwrap();
        for order in [TraversalOrder::DepthFirst, TraversalOrder::ByHeight] {
            let res = run_cpt(
                &inv,
                &truth,
                &AccuracyRequirement::exhaustive(),
                0.1,
                &mut rng,
                &TimingModel::default(),
                &CptConfig { order },
            )
            .unwrap();
            assert_eq!(res.reported_missing, truth.missing());
            assert_eq!(res.tags_checked, 300);
        }
    }

    #[test]
    fn depth_first_is_cheaper_than_by_height() {
        let inv = inventory(4000, 1);
        let truth = GroundTruth::from_indices(4000, []).unwrap();
        let run = |order| {
            run_cpt(
                &inv,
                &truth,
                &AccuracyRequirement::exhaustive(),
                0.0,
                &mut Prng::new(4),
                &TimingModel::default(),
                &CptConfig { order },
            )
            .unwrap()
        };
        let dfs = run(TraversalOrder::DepthFirst);
        let bfs = run(TraversalOrder::ByHeight);
        assert!(dfs.ledger.reader_bits < bfs.ledger.reader_bits);
        assert_eq!(dfs.observations, bfs.observations);
    }

    #[test]
    fn truth_size_must_match() {
        let inv = inventory(10, 0);
        let truth = GroundTruth::from_indices(9, []).unwrap();
        let err = run_cpt(
            &inv,
            &truth,
            &AccuracyRequirement::exhaustive(),
            0.0,
            &mut Prng::new(0),
            &TimingModel::default(),
            &CptConfig::default(),
        );
        assert!(matches!(err, Err(MtiError::ContractViolation(_))));
    }
}
