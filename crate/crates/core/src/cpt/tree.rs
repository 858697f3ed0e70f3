use crate::error::{MtiError, Result};
use crate::hashing::Prng;

/// Value of pseudo-ID bit `bit`.
#[inline]
pub fn bit_of(pseudo_id: u64, bit: u32) -> bool {
    (pseudo_id >> bit) & 1 == 1
}

/// A leaf holding one or two inventory indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leaf {
    tags: [usize; 2],
    len: u8,
    distinguishing_bit: Option<u32>,
}

impl Leaf {
    pub fn single(tag: usize) -> Self {
        Leaf {
            tags: [tag, usize::MAX],
            len: 1,
            distinguishing_bit: None,
        }
    }

    /// A two-tag leaf. `bit` must be a position where the pseudo-IDs differ.
    pub fn pair(a: usize, b: usize, bit: u32) -> Self {
        Leaf {
            tags: [a, b],
            len: 2,
            distinguishing_bit: Some(bit),
        }
    }

    pub fn tags(&self) -> &[usize] {
        &self.tags[..usize::from(self.len)]
    }

    pub fn len(&self) -> usize {
        usize::from(self.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_pair(&self) -> bool {
        self.len == 2
    }

    pub fn distinguishing_bit(&self) -> Option<u32> {
        self.distinguishing_bit
    }

    /// Bit every matching tag replies with: the distinguishing bit for
    /// pairs, bit 0 for singletons (any bit works, presence is busy/empty).
    pub fn probe_bit(&self) -> u32 {
        self.distinguishing_bit.unwrap_or(0)
    }
}

/// A node of the collision-partition tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CptNode {
    /// Splits on pseudo-ID bit `bit`; `zero` holds tags with that bit clear.
    Internal {
        bit: u32,
        zero: Box<CptNode>,
        one: Box<CptNode>,
    },
    Leaf(Leaf),
}

impl CptNode {
    pub fn internal(bit: u32, zero: CptNode, one: CptNode) -> Self {
        CptNode::Internal {
            bit,
            zero: Box::new(zero),
            one: Box::new(one),
        }
    }
}

/// Collision-partition tree with summary statistics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cpt {
    pub root: CptNode,
    /// Depth of the shallowest leaf (root has depth 0).
    pub h_min: u32,
    pub h_max: u32,
    pub leaf_count: usize,
    pub pseudo_id_bits: u32,
}

impl Cpt {
    /// Wraps a hand-built root and computes its statistics.
    pub fn from_root(root: CptNode, pseudo_id_bits: u32) -> Self {
        let mut h_min = u32::MAX;
        let mut h_max = 0;
        let mut leaf_count = 0;
        let mut stack = vec![(&root, 0u32)];
        while let Some((node, depth)) = stack.pop() {
            match node {
                CptNode::Leaf(_) => {
                    h_min = h_min.min(depth);
                    h_max = h_max.max(depth);
                    leaf_count += 1;
                }
                CptNode::Internal { zero, one, .. } => {
                    stack.push((one, depth + 1));
                    stack.push((zero, depth + 1));
                }
            }
        }
        Cpt {
            root,
            h_min,
            h_max,
            leaf_count,
            pseudo_id_bits,
        }
    }

    /// Leaves in depth-first order, zero branch before one branch.
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::with_capacity(self.leaf_count);
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            match node {
                CptNode::Leaf(l) => out.push(l),
                CptNode::Internal { zero, one, .. } => {
                    stack.push(one);
                    stack.push(zero);
                }
            }
        }
        out
    }
}

/// Builds the tree over `pseudo_ids` (each `bits` wide).
///
/// Sets of at most two tags become leaves. Larger sets split on the bit
/// minimizing `|#zeros - #ones|`; ties are broken by one PRNG draw modulo
/// the number of tied bits, drawn only when more than one bit ties.
pub fn build_cpt(pseudo_ids: &[u64], bits: u32, rng: &mut Prng) -> Result<Cpt> {
    if pseudo_ids.is_empty() {
        return Err(MtiError::EmptyInventory);
    }
    if !(1..=64).contains(&bits) {
        return Err(MtiError::invalid(
            "pseudo_id_bits",
            format!("{bits} not in 1..=64"),
        ));
    }
    let mut sorted = pseudo_ids.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(MtiError::DuplicatePseudoId);
    }
    if bits < 64 && sorted.last().is_some_and(|&v| v >> bits != 0) {
        return Err(MtiError::invalid(
            "pseudo_ids",
            format!("value wider than {bits} bits"),
        ));
    }
    let mut indices: Vec<usize> = (0..pseudo_ids.len()).collect();
    let mut builder = Builder {
        ids: pseudo_ids,
        bits,
        rng,
        ties: Vec::with_capacity(bits as usize),
    };
    let root = builder.build(&mut indices);
    Ok(Cpt::from_root(root, bits))
}

struct Builder<'a> {
    ids: &'a [u64],
    bits: u32,
    rng: &'a mut Prng,
    ties: Vec<u32>,
}

impl Builder<'_> {
    fn build(&mut self, set: &mut [usize]) -> CptNode {
        match *set {
            [a] => return CptNode::Leaf(Leaf::single(a)),
            [a, b] => {
                let (a, b) = (a.min(b), a.max(b));
                let bit = (self.ids[a] ^ self.ids[b]).trailing_zeros();
                return CptNode::Leaf(Leaf::pair(a, b, bit));
            }
            _ => {}
        }
        let bit = self.choose_bit(set);
        // In-place partition: zeros first.
        let mut split = 0;
        for i in 0..set.len() {
            if !bit_of(self.ids[set[i]], bit) {
                set.swap(i, split);
                split += 1;
            }
        }
        debug_assert!(
            split > 0 && split < set.len(),
            "chosen bit must split the set"
        );
        let (zeros, ones) = set.split_at_mut(split);
        let zero = self.build(zeros);
        let one = self.build(ones);
        CptNode::internal(bit, zero, one)
    }

    fn choose_bit(&mut self, set: &[usize]) -> u32 {
        let mut ones = [0u32; 64];
        for &i in set {
            let mut v = self.ids[i];
            while v != 0 {
                ones[v.trailing_zeros() as usize] += 1;
                v &= v - 1;
            }
        }
        let n = set.len() as i64;
        let mut best = i64::MAX;
        self.ties.clear();
        for bit in 0..self.bits {
            let imbalance = (n - 2 * i64::from(ones[bit as usize])).abs();
            if imbalance < best {
                best = imbalance;
                self.ties.clear();
            }
            if imbalance == best {
                self.ties.push(bit);
            }
        }
        // Bits fixed higher up split 0/all and can never win here.
        debug_assert!(best < n);
        if self.ties.len() == 1 {
            self.ties[0]
        } else {
            self.ties[self.rng.next_below(self.ties.len())]
        }
    }
}
