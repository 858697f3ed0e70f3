//! Property-based invariants of the tree, channel, hashing and protocols.

mod support;

use std::collections::HashSet;

use mti_core::baselines::{choose_seed, run_mmti, run_pcmti, run_sfmti, BaselineConfig};
use mti_core::channel::{
    charge_query, charge_response, decode_pair, transmit_slot, SlotObservation,
};
use mti_core::cpt::{
    build_cpt, delta_encode, plan_traversal, run_cpt, Cpt, CptConfig, CptNode, TagCursor,
    TraversalOrder,
};
use mti_core::harness::{run_algorithm, Algorithm, Instance, ProtocolConfig};
use mti_core::hashing::{finalize64, keyed_hash, make_pseudo_ids, reduce, Prng};
use mti_core::{AccuracyRequirement, CostLedger, GroundTruth, TagId, TimingModel};
use proptest::prelude::*;

fn distinct_ids(bits: u32) -> impl Strategy<Value = Vec<u64>> {
    let mask = if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    };
    prop::collection::hash_set(any::<u64>().prop_map(move |v| v & mask), 1..300)
        .prop_map(|s| s.into_iter().collect())
}

fn walk<'a>(
    node: &'a CptNode,
    set: Vec<usize>,
    ids: &[u64],
    out: &mut Vec<(&'a CptNode, Vec<usize>)>,
) {
    out.push((node, set.clone()));
    if let CptNode::Internal { bit, zero, one } = node {
        let (z, o): (Vec<usize>, Vec<usize>) =
            set.into_iter().partition(|&i| (ids[i] >> bit) & 1 == 0);
        walk(zero, z, ids, out);
        walk(one, o, ids, out);
    }
}

fn imbalance(set: &[usize], ids: &[u64], bit: u32) -> i64 {
    let ones = set.iter().filter(|&&i| (ids[i] >> bit) & 1 == 1).count() as i64;
    (set.len() as i64 - 2 * ones).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn tree_leaves_partition_the_inventory(ids in distinct_ids(12), seed in any::<u64>()) {
        let tree = build_cpt(&ids, 12, &mut Prng::new(seed)).unwrap();
        let mut seen = vec![0u32; ids.len()];
        for leaf in tree.leaves() {
            prop_assert!(leaf.len() == 1 || leaf.len() == 2);
            for &t in leaf.tags() {
                seen[t] += 1;
            }
            if let [a, b] = *leaf.tags() {
                let d = leaf.distinguishing_bit().unwrap();
                prop_assert_ne!((ids[a] >> d) & 1, (ids[b] >> d) & 1);
                prop_assert_eq!(d, (ids[a] ^ ids[b]).trailing_zeros());
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        prop_assert!(tree.h_min <= tree.h_max && tree.h_max <= 12);
        prop_assert_eq!(tree.leaf_count, tree.leaves().len());
    }

    #[test]
    fn every_split_is_as_balanced_as_possible(ids in distinct_ids(10), seed in any::<u64>()) {
        let tree = build_cpt(&ids, 10, &mut Prng::new(seed)).unwrap();
        let mut nodes = Vec::new();
        walk(&tree.root, (0..ids.len()).collect(), &ids, &mut nodes);
        for (node, set) in nodes {
            match node {
                CptNode::Internal { bit, .. } => {
                    let chosen = imbalance(&set, &ids, *bit);
                    prop_assert!(chosen < set.len() as i64, "split must be proper");
                    for other in 0..10 {
                        prop_assert!(imbalance(&set, &ids, other) >= chosen);
                    }
                }
                CptNode::Leaf(leaf) => {
                    let mut want = set.clone();
                    want.sort_unstable();
                    let mut got = leaf.tags().to_vec();
                    got.sort_unstable();
                    prop_assert_eq!(got, want);
                }
            }
        }
    }

    #[test]
    fn query_stream_selects_exactly_each_leaf(ids in distinct_ids(14), seed in any::<u64>(), by_height in any::<bool>()) {
        let tree = build_cpt(&ids, 14, &mut Prng::new(seed)).unwrap();
        let order = if by_height { TraversalOrder::ByHeight } else { TraversalOrder::DepthFirst };
        let plan = plan_traversal(&tree, order);
        prop_assert_eq!(plan.len(), tree.leaf_count);
        let mut cursor = TagCursor::default();
        let mut prev: Option<&[_]> = None;
        for p in &plan {
            let msg = delta_encode(prev, &p.path, p.leaf.probe_bit(), 14, tree.h_max);
            let frame = msg.encode();
            prop_assert_eq!(frame.len() as u64, msg.encoded_bits());
            let decoded = mti_core::cpt::QueryMessage::decode(&frame, msg.pop_width, msg.index_width).unwrap();
            cursor.apply(&decoded).unwrap();
            let mut matching: Vec<usize> = (0..ids.len()).filter(|&i| cursor.matches(ids[i])).collect();
            matching.sort_unstable();
            let mut want = p.leaf.tags().to_vec();
            want.sort_unstable();
            prop_assert_eq!(matching, want);
            prev = Some(&p.path);
        }
    }

    #[test]
    fn manchester_roundtrip(a_present in any::<bool>(), b_present in any::<bool>(), a_bit in any::<bool>()) {
        let b_bit = !a_bit;
        let mut responses = Vec::new();
        if a_present { responses.push(a_bit); }
        if b_present { responses.push(b_bit); }
        prop_assert_eq!(decode_pair(transmit_slot(&responses), a_bit, b_bit).unwrap(), (a_present, b_present));
    }

    #[test]
    fn slot_classification_ignores_order(mut responses in prop::collection::vec(any::<bool>(), 0..6)) {
        let before = transmit_slot(&responses);
        responses.reverse();
        prop_assert_eq!(transmit_slot(&responses), before);
        if responses.len() >= 3 {
            prop_assert_eq!(before, SlotObservation::UnresolvedCollision);
        }
    }

    #[test]
    fn ledger_never_decreases(ops in prop::collection::vec((any::<bool>(), 0u64..200), 1..50)) {
        let mut ledger = CostLedger::default();
        let timing = TimingModel::default();
        let mut last = (ledger, 0.0);
        for (query, amount) in ops {
            if query { charge_query(&mut ledger, amount) } else { charge_response(&mut ledger, amount % 3) }
            let t = mti_core::elapsed_seconds(&ledger, &timing);
            prop_assert!(ledger.short_slots >= last.0.short_slots);
            prop_assert!(ledger.long_slots >= last.0.long_slots);
            prop_assert!(ledger.reader_bits >= last.0.reader_bits);
            prop_assert!(ledger.tag_bits >= last.0.tag_bits);
            prop_assert!(t >= last.1);
            last = (ledger, t);
        }
    }

    #[test]
    fn finalizer_is_invertible(x in any::<u64>()) {
        prop_assert_eq!(support::unfinalize64(finalize64(x)), x);
    }

    #[test]
    fn reduce_stays_in_range(h in any::<u64>(), n in 1usize..1_000_000) {
        prop_assert!(reduce(h, n) < n);
    }

    #[test]
    fn pseudo_ids_are_distinct_and_fit(n in 1usize..2000, seed in any::<u64>()) {
        let tags: Vec<TagId> = (0..n as u128).map(|i| TagId::new(i * 0x1_0000_0001 + 5)).collect();
        let a = make_pseudo_ids(&tags, seed).unwrap();
        let distinct: HashSet<u64> = a.ids.iter().copied().collect();
        prop_assert_eq!(distinct.len(), n);
        prop_assert!(a.ids.iter().all(|&v| a.bits == 64 || v >> a.bits == 0));
        prop_assert!(a.iterations >= 1);
    }

    #[test]
    fn chosen_mmti_seed_dominates(n in 2usize..800, seed in any::<u64>()) {
        let tags: Vec<TagId> = (0..n as u128).map(|i| TagId::new(i ^ 0xFEED)).collect();
        let remaining: Vec<usize> = (0..n).collect();
        let mut rng = Prng::new(seed);
        let cands: Vec<u64> = (0..8).map(|_| rng.next_u64()).collect();
        let c = choose_seed(&tags, &remaining, n, &cands);
        prop_assert!(c.singletons.iter().all(|&s| s <= c.singletons[c.index]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_protocol_is_exact_in_exhaustive_mode(
        n in 1usize..1500,
        alpha_idx in 0usize..5,
        seed in any::<u64>(),
    ) {
        let alpha = [0.0, 0.01, 0.1, 0.5, 1.0][alpha_idx];
        let instance = Instance::generate(n, alpha, seed).unwrap();
        let req = AccuracyRequirement::exhaustive();
        for alg in Algorithm::ALL {
            let res = run_algorithm(alg, &instance, &req, alpha, &ProtocolConfig::default()).unwrap();
            prop_assert_eq!(&res.reported_missing[..], instance.truth.missing(), "{}", alg);
            prop_assert_eq!(res.tags_checked, n);
        }
    }

    #[test]
    fn sampling_runs_never_report_present_tags(
        n in 100usize..3000,
        seed in any::<u64>(),
        eps in 0.01f64..0.3,
        delta in 0.01f64..0.3,
    ) {
        let alpha = 0.05;
        let instance = Instance::generate(n, alpha, seed).unwrap();
        let req = AccuracyRequirement::new(eps, delta).unwrap();
        let budget = mti_core::stats::required_checks(n, alpha, &req);
        for alg in Algorithm::ALL {
            let res = run_algorithm(alg, &instance, &req, alpha, &ProtocolConfig::default()).unwrap();
            prop_assert!(res.reported_missing.iter().all(|&i| instance.truth.is_missing(i)));
            prop_assert!(res.tags_checked >= budget.min(n));
            prop_assert!(res.tags_checked <= n);
        }
    }
}

// ---------------------------------------------------------------------------
// Deterministic property checks
// ---------------------------------------------------------------------------

#[test]
fn handcrafted_tree_traversal_follows_lowest_common_ancestors() {
    // Five leaves over 3-bit pseudo-IDs:
    //            b0
    //         /      \
    //       b1        b1
    //      /  \      /  \
    //   {0,4}  b2  {1,5} {3,7}
    //         /  \
    //       {2}  {6}
    let ids: [u64; 8] = [0, 1, 2, 3, 4, 5, 6, 7];
    let leaf = |tags: &[usize]| {
        CptNode::Leaf(if let [a, b] = *tags {
            mti_core::cpt::Leaf::pair(a, b, (ids[a] ^ ids[b]).trailing_zeros())
        } else {
            mti_core::cpt::Leaf::single(tags[0])
        })
    };
    let root = CptNode::internal(
        0,
        CptNode::internal(
            1,
            leaf(&[0, 4]),
            CptNode::internal(2, leaf(&[2]), leaf(&[6])),
        ),
        CptNode::internal(1, leaf(&[1, 5]), leaf(&[3, 7])),
    );
    let tree = Cpt::from_root(root, 3);
    assert_eq!((tree.h_min, tree.h_max, tree.leaf_count), (2, 3, 5));
    let plan = plan_traversal(&tree, TraversalOrder::DepthFirst);
    let order: Vec<Vec<usize>> = plan.iter().map(|p| p.leaf.tags().to_vec()).collect();
    assert_eq!(
        order,
        vec![vec![0, 4], vec![2], vec![6], vec![1, 5], vec![3, 7]]
    );
    for w in plan.windows(2) {
        let (a, b) = (&w[0].path, &w[1].path);
        let lca_depth = a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count();
        let msg = delta_encode(Some(a), b, w[1].leaf.probe_bit(), 3, tree.h_max);
        assert_eq!(msg.pop_count as usize, a.len() - lca_depth);
        assert_eq!(msg.directives.len(), b.len() - lca_depth);
        assert_eq!(
            msg.pop_count as usize + msg.directives.len(),
            a.len() + b.len() - 2 * lca_depth
        );
    }
}

#[test]
fn mean_tree_height_is_within_twice_log_n() {
    for k in 8..=16u32 {
        let n = 1usize << k;
        let trials = if k >= 14 { 3 } else { 10 };
        let mut total = 0.0;
        for t in 0..trials {
            let inst = Instance::generate(n, 0.0, u64::from(k) * 1000 + t).unwrap();
            let tree = build_cpt(
                inst.inventory.pseudo_ids(),
                inst.inventory.pseudo_id_bits(),
                &mut Prng::new(t),
            )
            .unwrap();
            total += f64::from(tree.h_max);
        }
        let mean = total / trials as f64;
        assert!(mean <= 2.0 * f64::from(k), "N=2^{k}: mean h_max {mean}");
    }
}

#[test]
fn framed_protocols_meet_the_check_budget_without_double_checks() {
    let n = 4000;
    let alpha = 0.02;
    let req = AccuracyRequirement::new(0.05, 0.1).unwrap();
    let budget = mti_core::stats::required_checks(n, alpha, &req);
    let stop = mti_core::stats::stopping_sample_size(0.05, 0.1, alpha).unwrap() as usize;
    assert!(budget >= stop.min(n));
    for seed in 0..5 {
        let inst = Instance::generate(n, alpha, seed).unwrap();
        let cfg = BaselineConfig::default();
        let timing = TimingModel::default();
        type Runner = fn(
            &mti_core::Inventory,
            &GroundTruth,
            &AccuracyRequirement,
            f64,
            &mut Prng,
            &TimingModel,
            &BaselineConfig,
        ) -> mti_core::Result<mti_core::IdentificationResult>;
        let runners: [Runner; 3] = [run_pcmti, run_mmti, run_sfmti];
        for run in runners {
            // Any double verification would surface as an error.
            let res = run(
                &inst.inventory,
                &inst.truth,
                &req,
                alpha,
                &mut Prng::new(seed),
                &timing,
                &cfg,
            )
            .unwrap();
            assert!(res.tags_checked >= budget);
        }
        let cpt = run_cpt(
            &inst.inventory,
            &inst.truth,
            &req,
            alpha,
            &mut Prng::new(seed),
            &timing,
            &CptConfig::default(),
        )
        .unwrap();
        assert!(cpt.tags_checked >= budget && cpt.tags_checked <= budget + 1);
    }
}

#[test]
fn keyed_hash_avalanche() {
    // Flipping one input bit flips each output bit with probability ~1/2.
    let mut rng = Prng::new(17);
    let mut flips = [0u32; 64];
    let samples = 4000;
    for _ in 0..samples {
        let id = u128::from(rng.next_u64()) | (u128::from(rng.next_u64() & 0xFFFF_FFFF) << 64);
        let bit = rng.next_below(96);
        let seed = rng.next_u64();
        let d = keyed_hash(TagId::new(id), seed) ^ keyed_hash(TagId::new(id ^ (1 << bit)), seed);
        for (j, f) in flips.iter_mut().enumerate() {
            *f += ((d >> j) & 1) as u32;
        }
    }
    for (j, &f) in flips.iter().enumerate() {
        let p = f64::from(f) / f64::from(samples);
        assert!((p - 0.5).abs() < 0.05, "output bit {j} flips with rate {p}");
    }
}

#[test]
fn keyed_hash_slots_are_uniform() {
    // Chi-square over 64 slots, 64_000 sequential IDs; the 99.9% point of
    // chi-square with 63 degrees of freedom is about 103.4.
    let slots = 64;
    let mut counts = vec![0f64; slots];
    for i in 0..64_000u128 {
        counts[reduce(keyed_hash(TagId::new(i), 99), slots)] += 1.0;
    }
    let expected = 1000.0;
    let chi2: f64 = counts
        .iter()
        .map(|c| (c - expected).powi(2) / expected)
        .sum();
    assert!(chi2 < 103.4, "chi-square {chi2}");
}

// ---------------------------------------------------------------------------
// Reference curves
// ---------------------------------------------------------------------------

proptest! {
    /// Lower bound <= tree protocol <= PCMTI inside the bound window, where
    /// the logarithm in the lower bound is at least one bit.
    #[test]
    fn reference_curves_are_ordered(
        n in 16usize..1_000_000,
        epsilon in 0.001f64..0.5,
        delta in 0.0f64..0.333,
        alpha in 0.0f64..0.99,
    ) {
        use mti_core::stats::{expected_time_reference, lower_bound_reference, ReferenceAlgorithm};
        prop_assume!((1.0 - delta) * (1.0 - alpha) / epsilon >= 2.0);
        let lower = lower_bound_reference(n, epsilon, delta, alpha).unwrap();
        prop_assume!(lower.in_range);
        let cpt = expected_time_reference(ReferenceAlgorithm::Cpt, n, epsilon, delta, alpha).unwrap();
        let pcmti = expected_time_reference(ReferenceAlgorithm::Pcmti, n, epsilon, delta, alpha).unwrap();
        prop_assert!(lower.value <= cpt.value * (1.0 + 1e-12));
        prop_assert!(cpt.value <= pcmti.value);
    }
}
